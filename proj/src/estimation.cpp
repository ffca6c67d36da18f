#include "rvc/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rvc/errors.hpp"
#include "rvc/jacobi.hpp"
#include "rvc/stats.hpp"

namespace rvc::est {

void RegressionWindow::validate(double sample_period) const {
  if (gamma.size() != h_rows.rows())
    throw InconsistentDimensions("window: gamma length != number of H rows");
  if (timestamps.size() != static_cast<size_t>(h_rows.rows()))
    throw InconsistentDimensions("window: timestamps length != number of H rows");
  for (size_t i = 1; i < timestamps.size(); ++i) {
    const double dt = timestamps[i] - timestamps[i - 1];
    if (dt <= 0.0)
      throw ProfileGap("window: timestamps not strictly increasing");
    if (dt > sample_period * 1.5)
      throw ProfileGap("window: gap of " + std::to_string(dt) +
                       " s exceeds one sample period");
  }
}

namespace {

void symmetrize(Eigen::MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

void update_residual(double e, double mu, double& rv, double& n_obs) {
  n_obs += 1.0;
  if (mu < 1.0)
    rv = mu * rv + (1.0 - mu) * e * e;
  else
    rv += (e * e - rv) / n_obs;
}

struct CovFResult {
  Eigen::VectorXd gain;
  Eigen::MatrixXd p_new;
};

// Shared F-mode covariance/gain kernel.
CovFResult rls_f_cov(const Eigen::MatrixXd& p, const Eigen::RowVectorXd& h, double mu) {
  CovFResult r;
  const Eigen::VectorXd ph = p * h.transpose();
  const double denom = mu + h.dot(ph);
  r.gain = ph / denom;
  r.p_new = (p - r.gain * (h * p)) / mu;
  symmetrize(r.p_new);
  return r;
}

struct CovSfResult {
  Eigen::VectorXd gain;
  Eigen::MatrixXd p_new;
  Eigen::VectorXd tau_new;
};

// Shared SF kernel: unit denominator gain, eigen rebuild of (I - G h) P with
// the printed two-case tau rule, then the [tau_min, tau_max] clamp.
CovSfResult rls_sf_cov(const Eigen::MatrixXd& p, const Eigen::VectorXd& tau_prev,
                       const Eigen::RowVectorXd& h, const SfOptions& opts) {
  CovSfResult r;
  const Eigen::VectorXd ph = p * h.transpose();
  const double denom = 1.0 + h.dot(ph);
  r.gain = ph / denom;
  Eigen::MatrixXd p_tilde = p - r.gain * (h * p);
  symmetrize(p_tilde);

  const auto eig = jacobi_eigh(p_tilde, opts.max_jacobi_sweeps);
  const int n = static_cast<int>(eig.eigenvalues.size());

  Eigen::VectorXd tau(n);
  Eigen::VectorXd mu_vec =
      opts.mu_vec.size() == n ? opts.mu_vec : Eigen::VectorXd::Ones(n);
  if (!opts.tau_rule_enabled) {
    tau = eig.eigenvalues;
  } else {
    for (int i = 0; i < n; ++i) {
      const double raw = eig.eigenvalues(i);
      const double prev = tau_prev.size() == n ? tau_prev(i) : raw;
      const double anchor = opts.tau_rule == SfTauRule::Printed ? prev : raw;
      double t;
      if (raw > opts.tau_max)
        t = 1.0;  // first case of the printed rule
      else
        t = opts.tau_min + (1.0 - opts.tau_min / opts.tau_max) * anchor;
      tau(i) = std::clamp(t, opts.tau_min, opts.tau_max);
    }
  }

  r.p_new = eig.eigenvectors *
            (tau.array() / mu_vec.array()).matrix().asDiagonal() *
            eig.eigenvectors.transpose();
  symmetrize(r.p_new);
  r.tau_new = tau;
  return r;
}

}  // namespace

EstimatorState ls_bootstrap(const RegressionWindow& window, double lambda_reg) {
  if (lambda_reg < 0.0)
    throw ConfigError("estimator.lambda_reg", "must be >= 0");
  const int dim = window.dim();
  const int m = window.rows();
  if (m == 0) throw SingularSystem("ls_bootstrap: empty window");

  const Eigen::MatrixXd hth = window.h_rows.transpose() * window.h_rows;
  const Eigen::MatrixXd r_mat =
      hth + lambda_reg * Eigen::MatrixXd::Identity(dim, dim);

  Eigen::FullPivLU<Eigen::MatrixXd> lu_r(r_mat);
  if (!lu_r.isInvertible())
    throw SingularSystem(
        "ls_bootstrap: H^T H + lambda I singular; raise lambda or extend the window");

  EstimatorState st;
  st.x_hat = lu_r.solve(window.h_rows.transpose() * window.gamma);
  st.r_mat = r_mat;

  Eigen::FullPivLU<Eigen::MatrixXd> lu_hth(hth);
  if (lu_hth.isInvertible())
    st.p_cov = lu_hth.inverse();
  else
    st.p_cov = lu_r.inverse();
  symmetrize(st.p_cov);

  const Eigen::VectorXd resid = window.gamma - window.h_rows * st.x_hat;
  const double sse = resid.squaredNorm();
  st.residual_var = m > dim ? sse / (m - dim) : sse / m;
  st.n_obs = m;
  return st;
}

void rls_f_update(EstimatorState& state, const RlsSample& sample, double mu,
                  const RlsFOptions& opts) {
  if (sample.h.size() != state.dim())
    throw InconsistentDimensions("rls_f_update: row dimension mismatch");
  if (!(mu > 0.0) || mu > 1.0)
    throw ConfigError("estimator.mu", "forgetting factor must be in (0,1]");

  const double e = sample.gamma - sample.h.dot(state.x_hat);
  const auto cov = rls_f_cov(state.p_cov, sample.h, mu);
  state.x_hat += cov.gain * e;
  state.p_cov = cov.p_new;
  state.r_mat = mu * state.r_mat + sample.h.transpose() * sample.h;
  state.mu = mu;
  update_residual(e, mu, state.residual_var, state.n_obs);

  const double max_diag = state.p_cov.diagonal().maxCoeff();
  if (max_diag > opts.cov_cap)
    throw NumericalBlowup("rls_f_update: covariance diagonal " +
                          std::to_string(max_diag) + " exceeds cap (windup)");
}

void sf_handoff(EstimatorState& state, double tau_min, double tau_max,
                int max_jacobi_sweeps) {
  const auto eig = jacobi_eigh(state.p_cov, max_jacobi_sweeps);
  Eigen::VectorXd tau = eig.eigenvalues.cwiseMax(tau_min).cwiseMin(tau_max);
  state.p_cov =
      eig.eigenvectors * tau.asDiagonal() * eig.eigenvectors.transpose();
  symmetrize(state.p_cov);
  state.tau = tau;
  state.tau_min = tau_min;
  state.tau_max = tau_max;
}

void rls_sf_update(EstimatorState& state, const RlsSample& sample,
                   const SfOptions& opts) {
  if (sample.h.size() != state.dim())
    throw InconsistentDimensions("rls_sf_update: row dimension mismatch");
  if (opts.tau_rule_enabled && !(opts.tau_min > 0.0 && opts.tau_min < opts.tau_max))
    throw ConfigError("estimator.tau", "need 0 < tau_min < tau_max");

  if (state.tau.size() != state.dim() && opts.tau_rule_enabled)
    sf_handoff(state, opts.tau_min, opts.tau_max, opts.max_jacobi_sweeps);

  const double e = sample.gamma - sample.h.dot(state.x_hat);
  const auto cov = rls_sf_cov(state.p_cov, state.tau, sample.h, opts);
  state.x_hat += cov.gain * e;
  state.p_cov = cov.p_new;
  state.tau = cov.tau_new;
  state.tau_min = opts.tau_min;
  state.tau_max = opts.tau_max;
  update_residual(e, state.mu, state.residual_var, state.n_obs);
}

SensitivityEstimate interval_from_covariance(const EstimatorState& state,
                                             double alpha) {
  const int dim = state.dim();
  if (dim % 2 != 0)
    throw InconsistentDimensions("interval_from_covariance: odd state dimension");
  const int nb = dim / 2;
  const double z = two_sided_gauss_quantile(alpha);

  SensitivityEstimate est;
  est.confidence = alpha;
  est.kp_hat = state.x_hat.head(nb);
  est.kq_hat = state.x_hat.tail(nb);
  est.dkp.resize(nb);
  est.dkq.resize(nb);
  for (int j = 0; j < nb; ++j) {
    const double vp = std::max(0.0, state.residual_var * state.p_cov(j, j));
    const double vq =
        std::max(0.0, state.residual_var * state.p_cov(nb + j, nb + j));
    est.dkp(j) = z * std::sqrt(vp);
    est.dkq(j) = z * std::sqrt(vq);
  }
  return est;
}

void EstimatorBank::bootstrap(const Eigen::MatrixXd& h, const Eigen::MatrixXd& gammas,
                              const std::vector<double>& timestamps, const Config& cfg,
                              double sample_period) {
  cfg_ = cfg;
  const int n_nodes = static_cast<int>(gammas.cols());
  const int dim = static_cast<int>(h.cols());

  x_.resize(dim, n_nodes);
  residual_var_.resize(n_nodes);
  n_obs_.resize(n_nodes);

  for (int k = 0; k < n_nodes; ++k) {
    RegressionWindow w;
    w.h_rows = h;
    w.gamma = gammas.col(k);
    w.timestamps = timestamps;
    w.validate(sample_period);
    EstimatorState st = ls_bootstrap(w, cfg.lambda_reg);
    x_.col(k) = st.x_hat;
    residual_var_(k) = st.residual_var;
    n_obs_(k) = st.n_obs;
    if (k == 0) {
      shared_ = st;
      shared_.mu = cfg.mu;
    }
  }
  if (cfg.mode == RlsMode::SelectiveForgetting)
    sf_handoff(shared_, cfg.sf.tau_min, cfg.sf.tau_max, cfg.sf.max_jacobi_sweeps);
  ready_ = true;
}

void EstimatorBank::update(const Eigen::RowVectorXd& h, const Eigen::VectorXd& gammas) {
  if (!ready_) throw ConfigError("estimator", "bank not bootstrapped");
  if (gammas.size() != n_nodes() || h.size() != dim())
    throw InconsistentDimensions("EstimatorBank::update: dimension mismatch");

  // shared covariance step once, then per-node coefficient steps
  Eigen::VectorXd gain;
  if (cfg_.mode == RlsMode::SelectiveForgetting) {
    const auto cov = rls_sf_cov(shared_.p_cov, shared_.tau, h, cfg_.sf);
    gain = cov.gain;
    shared_.p_cov = cov.p_new;
    shared_.tau = cov.tau_new;
  } else {
    const auto cov = rls_f_cov(shared_.p_cov, h, cfg_.mu);
    gain = cov.gain;
    shared_.p_cov = cov.p_new;
    shared_.r_mat = cfg_.mu * shared_.r_mat + h.transpose() * h;
    const double max_diag = shared_.p_cov.diagonal().maxCoeff();
    if (max_diag > cfg_.f.cov_cap)
      throw NumericalBlowup("EstimatorBank: covariance exceeds cap (windup)");
  }

  for (int k = 0; k < n_nodes(); ++k) {
    const double e = gammas(k) - h.dot(x_.col(k));
    x_.col(k) += gain * e;
    double rv = residual_var_(k), n = n_obs_(k);
    update_residual(e, cfg_.mu, rv, n);
    residual_var_(k) = rv;
    n_obs_(k) = n;
  }
}

EstimatorState EstimatorBank::node_state(int node) const {
  EstimatorState st = shared_;
  st.x_hat = x_.col(node);
  st.residual_var = residual_var_(node);
  st.n_obs = n_obs_(node);
  return st;
}

SensitivityEstimate EstimatorBank::estimate(int node, double alpha) const {
  return interval_from_covariance(node_state(node), alpha);
}

}  // namespace rvc::est
