#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace rvc::grid {

enum class BusType { Slack, PQ };

struct BusSpec {
  int id = 0;  // external bus number (e.g. 1 for B01)
  BusType type = BusType::PQ;
  double base_kv = 0.0;  // 0 -> inherit network v_base
};

struct BranchSpec {
  int from = 0;
  int to = 0;
  double r_ohm = 0.0;
  double x_ohm = 0.0;
  double ampacity_a = 0.0;
};

/// Static description of the feeder. Buses keep their external ids; all
/// solver-facing quantities are addressed by the position of a bus in
/// `buses` (the "bus index") or, for non-slack vectors, by the position in
/// non_slack_indices().
struct NetworkModel {
  std::vector<BusSpec> buses;
  std::vector<BranchSpec> branches;
  double s_base_va = 0.0;
  double v_base_v = 0.0;

  /// Throws ConfigError unless: exactly one slack, connected graph,
  /// |z| > 0 and ampacity > 0 on every branch, positive bases.
  void validate() const;

  int n_buses() const { return static_cast<int>(buses.size()); }
  int n_nonslack() const { return n_buses() - 1; }
  int slack_position() const;
  std::vector<int> non_slack_positions() const;
  int position_of(int bus_id) const;  // -1 if unknown

  double z_base_ohm() const { return v_base_v * v_base_v / s_base_va; }

  static NetworkModel from_json_text(const std::string& text);
  static NetworkModel from_json_file(const std::string& path);
  std::string to_json_text() const;
};

/// A converged operating point. Vectors are indexed by bus position and
/// include the slack bus.
struct GridState {
  Eigen::VectorXd v_mag;  // pu
  Eigen::VectorXd v_ang;  // rad
  Eigen::VectorXd p_inj;  // pu, generation positive
  Eigen::VectorXd q_inj;  // pu
  double slack_v = 1.0;   // pu

  /// v_mag restricted to non-slack buses, in non_slack_positions() order.
  Eigen::VectorXd v_nonslack(const NetworkModel& model) const;
};

/// dv/dp and dv/dq over non-slack buses: kp(i,j) = d|v_i| / d p_j.
struct SensitivityMatrix {
  Eigen::MatrixXd kp;
  Eigen::MatrixXd kq;
  double computed_at = 0.0;  // seconds since run start
};

struct PowerFlowOptions {
  int max_iterations = 50;
  double tolerance = 1e-10;  // infinity norm of the pu power mismatch
};

/// Full Newton-Raphson in polar form from a flat start.
/// `p_inj`/`q_inj` are per-unit injections over non-slack buses in
/// non_slack_positions() order. Throws NonConvergence / SingularJacobian.
GridState solve_power_flow(const NetworkModel& model,
                           const Eigen::VectorXd& p_inj,
                           const Eigen::VectorXd& q_inj, double slack_v,
                           const PowerFlowOptions& opts = {});

/// Ground-truth sensitivities by central finite differences with step h
/// around `state` (truncation error O(h^2)). 4*N_b perturbed flows.
SensitivityMatrix oracle_sensitivities(const NetworkModel& model,
                                       const GridState& state,
                                       double h = 1e-4,
                                       const PowerFlowOptions& opts = {});

/// First-order voltage update: v_i = prev_i + kp_i . dp + kq_i . dq.
Eigen::VectorXd linearized_voltage(const Eigen::VectorXd& prev_v,
                                   const Eigen::MatrixXd& kp,
                                   const Eigen::MatrixXd& kq,
                                   const Eigen::VectorXd& dp,
                                   const Eigen::VectorXd& dq);

}  // namespace rvc::grid
