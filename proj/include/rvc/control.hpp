#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "rvc/estimation.hpp"
#include "rvc/qp.hpp"

namespace rvc::ctrl {

struct PvPlantConfig {
  int bus_id = 0;
  double s_max_va = 0.0;          // converter rating
  double pf_min = 0.9;            // minimum power factor
  bool reactive_capable = true;   // false forces q == 0

  /// zeta = sqrt((1 - PF^2) / PF^2), the reactive cone slope.
  double zeta() const;
  void validate() const;
};

/// How the interval uncertainty enters the budget reformulation.
///
/// SplitBudget (default): one dual pair (g^p, g^q) per plant and node, so a
/// plant's active and reactive coefficient deviations are protected
/// independently; the budget xi stays in plant units (each plant counts two
/// deviation sources, the z coefficient is 2*xi). At xi = n_plants the
/// worst-case vertex bound is covered exactly.
///
/// AsPrinted: a single g per plant and node with both coupling rows written
/// against y^p. Weaker protection; kept for comparison.
enum class RobustFormulation { SplitBudget, AsPrinted };

struct RobustControlProblem {
  Eigen::VectorXd v_prev;   // measured |v| per non-slack node (pu)
  std::vector<est::SensitivityEstimate> estimates;  // one per node row
  std::vector<int> plant_col;  // column index of each plant in the estimates
  Eigen::VectorXd p_meas_w;    // last measured plant injections
  Eigen::VectorXd q_meas_var;
  Eigen::VectorXd mpp_w;       // per-plant MPP forecast
  double v_min = 0.96;
  double v_max = 1.04;
  double voltage_margin = 0.0;  // tightens both voltage bounds
  Eigen::VectorXd xi;           // per node, in [0, n_plants]
  int polygon_segments = 16;
  RobustFormulation formulation = RobustFormulation::SplitBudget;

  int n_nodes() const { return static_cast<int>(v_prev.size()); }
  int n_plants() const { return static_cast<int>(plant_col.size()); }
  void validate(const std::vector<PvPlantConfig>& plants) const;
};

/// Variable offsets into the assembled QP vector (all in pu).
struct RobustQpLayout {
  int n_plants = 0;
  int n_nodes = 0;
  int n_vars = 0;
  int p0 = 0, q0 = 0, yp0 = 0, yq0 = 0, z0 = 0, gp0 = 0, gq0 = -1;
  int p(int k) const { return p0 + k; }
  int q(int k) const { return q0 + k; }
  int yp(int k) const { return yp0 + k; }
  int yq(int k) const { return yq0 + k; }
  int z(int i) const { return z0 + i; }
  int gp(int i, int k) const { return gp0 + i * n_plants + k; }
  int gq(int i, int k) const { return gq0 + i * n_plants + k; }
};

struct Setpoint {
  Eigen::VectorXd p_pv_w;
  Eigen::VectorXd q_pv_var;
  qp::QpStatus status = qp::QpStatus::Optimal;
  double objective = 0.0;  // sum (p - mpp)^2 + q^2, in pu^2
  int iterations = 0;
  qp::KktResiduals kkt;
  // auxiliaries for audit, pu
  Eigen::VectorXd z, yp, yq;
  Eigen::MatrixXd gp, gq;  // n_nodes x n_plants; gq empty in AsPrinted mode
};

/// Assemble the robust QP. Powers are normalized by s_base_va internally;
/// physical results are independent of the chosen base.
std::pair<qp::QpProblem, RobustQpLayout> build_robust_qp(
    const RobustControlProblem& problem, const std::vector<PvPlantConfig>& plants,
    double s_base_va);

/// Build + solve + extract. On Infeasible/MaxIterations the setpoint powers
/// are left at the previous measured values and status reports the failure;
/// the caller decides the fallback.
Setpoint solve_robust(const RobustControlProblem& problem,
                      const std::vector<PvPlantConfig>& plants, double s_base_va,
                      const qp::QpOptions& opts = {});

struct RobustnessReport {
  Eigen::VectorXd worst_high;  // per node, max voltage over coefficient vertices
  Eigen::VectorXd worst_low;
  int vertices = 0;
};

/// Independent audit: enumerate every sign vertex of the coefficient
/// intervals on the controllable columns and evaluate the first-order
/// voltage model at the commanded deltas. Throws TooManyVertices when more
/// than 10 interval coefficients per node would be enumerated.
RobustnessReport verify_robustness(const RobustControlProblem& problem,
                                   const std::vector<PvPlantConfig>& plants,
                                   double s_base_va, const Setpoint& setpoint);

}  // namespace rvc::ctrl
