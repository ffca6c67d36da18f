#pragma once

#include <Eigen/Dense>
#include <vector>

namespace rvc::est {

/// One batch of regression rows: gamma(t) = h(t) . x with
/// gamma = voltage delta at the monitored node and h = [dp dq] over all
/// non-slack buses (2*N_b columns).
struct RegressionWindow {
  Eigen::VectorXd gamma;            // M
  Eigen::MatrixXd h_rows;           // M x 2*N_b
  std::vector<double> timestamps;   // seconds, strictly increasing

  int rows() const { return static_cast<int>(h_rows.rows()); }
  int dim() const { return static_cast<int>(h_rows.cols()); }

  /// Rows must be time-ordered with no gap larger than one sample period.
  void validate(double sample_period) const;
};

/// Recursive estimator state for a single monitored node.
/// p_cov is kept symmetric; in SF mode `tau` carries the covariance
/// eigenvalues (ascending) used by the selective-forgetting rule.
struct EstimatorState {
  Eigen::VectorXd x_hat;       // 2*N_b, K^p stacked over K^q
  Eigen::MatrixXd p_cov;
  Eigen::MatrixXd r_mat;       // information matrix H^T H + lambda I
  double mu = 0.98;
  Eigen::VectorXd tau;         // empty until the first SF update
  double tau_min = 0.01;
  double tau_max = 100.0;
  double residual_var = 0.0;
  double n_obs = 0.0;          // observation count for the mu = 1 mean

  int dim() const { return static_cast<int>(x_hat.size()); }
};

/// Interval estimate per node: hat +- delta at the given confidence.
struct SensitivityEstimate {
  Eigen::VectorXd kp_hat;
  Eigen::VectorXd kq_hat;
  Eigen::VectorXd dkp;   // nonnegative half-widths
  Eigen::VectorXd dkq;
  double confidence = 0.99;
};

struct RlsSample {
  double gamma = 0.0;
  Eigen::RowVectorXd h;
};

struct RlsFOptions {
  double cov_cap = 1e9;  // NumericalBlowup when any p_cov diagonal exceeds it
};

/// Variants of the two-case tau update. Both share the first case (reset to
/// 1 when the updated eigenvalue exceeds tau_max) and the final clamp to
/// [tau_min, tau_max]; they differ in what the affine inflation map
/// tau_min + (1 - tau_min/tau_max) * x is applied to.
///
/// MeasurementAnchored (default): x is the eigenvalue of the
/// measurement-updated covariance, so directions shrink with data and
/// re-inflate toward tau_max without it. Printed: x is the previous step's
/// tau, which ignores the measurement update entirely and keeps the gain
/// pinned near its initial level; kept selectable for comparison. The two
/// coincide whenever the step carries no excitation.
enum class SfTauRule { MeasurementAnchored, Printed };

struct SfOptions {
  Eigen::VectorXd mu_vec;        // per-direction forgetting; empty = all ones
  double tau_min = 0.01;
  double tau_max = 100.0;
  bool tau_rule_enabled = true;  // false reduces SF to plain RLS with mu = 1
  SfTauRule tau_rule = SfTauRule::MeasurementAnchored;
  int max_jacobi_sweeps = 100;
};

/// Ridge bootstrap: x = (H^T H + lambda I)^-1 H^T Gamma with
/// p_cov = (H^T H)^-1 when invertible, else the regularized inverse.
/// Throws SingularSystem when H^T H + lambda I is singular.
EstimatorState ls_bootstrap(const RegressionWindow& window, double lambda_reg);

/// Plain forgetting update:
///   e = gamma - h x;  G = P h^T / (mu + h P h^T)
///   x += G e;         P = (I - G h) P / mu (re-symmetrized)
/// Throws NumericalBlowup when the covariance exceeds opts.cov_cap.
void rls_f_update(EstimatorState& state, const RlsSample& sample, double mu,
                  const RlsFOptions& opts = {});

/// Selective forgetting update: gain with unit denominator offset, then the
/// covariance is rebuilt from the eigenpairs of (I - G h) P with the
/// two-case tau rule applied and clamped to [tau_min, tau_max].
/// A state fresh from ls_bootstrap is first passed through sf_handoff().
void rls_sf_update(EstimatorState& state, const RlsSample& sample,
                   const SfOptions& opts = {});

/// Clamp the covariance eigenvalues into [tau_min, tau_max] and seed `tau`.
/// Applied once when an LS-bootstrapped state enters SF operation, so the
/// first tau-rule step never sees the unbounded ridge covariance.
void sf_handoff(EstimatorState& state, double tau_min, double tau_max,
                int max_jacobi_sweeps = 100);

/// Gaussian interval: delta_j = z(alpha) * sqrt(residual_var * p_cov[j][j]).
SensitivityEstimate interval_from_covariance(const EstimatorState& state,
                                             double alpha);

enum class RlsMode { PlainForgetting, SelectiveForgetting };

/// Same-H estimator bank: all monitored nodes share one regression row
/// h(t), hence identical covariance trajectories. The bank runs the
/// covariance/eigen update once per sample and keeps per-node x/residuals,
/// producing states identical to running the per-node ops independently.
class EstimatorBank {
 public:
  EstimatorBank() = default;

  struct Config {
    RlsMode mode = RlsMode::SelectiveForgetting;
    double mu = 0.98;          // forgetting (F mode and residual averaging)
    double lambda_reg = 1e-6;
    SfOptions sf;
    RlsFOptions f;
  };

  /// gammas: M x n_nodes, one column per monitored node.
  void bootstrap(const Eigen::MatrixXd& h, const Eigen::MatrixXd& gammas,
                 const std::vector<double>& timestamps, const Config& cfg,
                 double sample_period);

  /// One sample for every node at once.
  void update(const Eigen::RowVectorXd& h, const Eigen::VectorXd& gammas);

  bool ready() const { return ready_; }
  int n_nodes() const { return static_cast<int>(x_.cols()); }
  int dim() const { return static_cast<int>(x_.rows()); }

  EstimatorState node_state(int node) const;
  SensitivityEstimate estimate(int node, double alpha) const;
  const Eigen::MatrixXd& p_cov() const { return shared_.p_cov; }

 private:
  EstimatorState shared_;     // x_hat unused; carries P, R, tau, mu
  Eigen::MatrixXd x_;         // dim x n_nodes
  Eigen::VectorXd residual_var_;
  Eigen::VectorXd n_obs_;
  Config cfg_;
  bool ready_ = false;
};

}  // namespace rvc::est
