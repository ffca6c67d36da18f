#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rvc/control.hpp"
#include "rvc/estimation.hpp"
#include "rvc/forecast.hpp"
#include "rvc/grid.hpp"
#include "rvc/scenario.hpp"
#include "rvc/stats.hpp"

namespace rvc::sim {

/// One second of grid truth or measurement: vectors over all buses in
/// network order (slack included).
struct MeasurementSample {
  double t = 0.0;
  Eigen::VectorXd v_pu;
  Eigen::VectorXd p_w;
  Eigen::VectorXd q_var;
  forecast::WeatherSample weather;
};

/// Multiplicative transducer noise: class% read as a 3-sigma bound on the
/// reading; independent draws per channel and per second.
MeasurementSample apply_noise(const MeasurementSample& truth,
                              const scenario::NoiseParams& params,
                              GaussianSampler& rng);

struct CycleRecord {
  long t = 0;  // decision instant; commands take effect at t+1
  Eigen::VectorXd p_cmd_w;  // applied commands (post-fallback)
  Eigen::VectorXd q_cmd_var;
  Eigen::VectorXd p_solver_w;  // solver proposal before fallback
  Eigen::VectorXd q_solver_var;
  Eigen::VectorXd mpp_w;
  Eigen::VectorXd p_meas_w;  // plant measurements anchoring the deltas
  Eigen::VectorXd q_meas_var;
  Eigen::VectorXd v_meas;  // non-slack, pu
  qp::QpStatus status = qp::QpStatus::Optimal;
  bool applied = true;
  std::string hold_reason;  // "", "infeasible", "max_iterations", "deadline"
  double objective = 0.0;
  int qp_iterations = 0;
  bool rank_deficient = false;
  double compute_ms = 0.0;

  // estimate/oracle snapshots for the report nodes (full rows)
  std::vector<est::SensitivityEstimate> report_estimates;
  std::vector<Eigen::VectorXd> report_kp_true;
  std::vector<Eigen::VectorXd> report_kq_true;

  // all-node estimates restricted to plant columns, for the robustness audit
  Eigen::MatrixXd kp_plant, dkp_plant, kq_plant, dkq_plant;  // nodes x plants
};

struct RunLog {
  std::vector<int> bus_ids;      // column order of the voltage matrices
  std::vector<int> nonslack_ids;
  Eigen::MatrixXd v_true;  // steps x n_buses
  Eigen::MatrixXd v_meas;
  std::vector<CycleRecord> cycles;
  long steps = 0;
  bool completed = false;
  std::string abort_reason;

  std::uint64_t seed_used = 0;

  std::uint64_t telemetry_sent = 0;
  std::uint64_t telemetry_send_errors = 0;
  std::uint64_t telemetry_crc_failures = 0;
  std::uint64_t telemetry_frames_complete = 0;
  std::uint64_t telemetry_frames_partial = 0;

  double mean_cycle_ms = 0.0;
  double max_cycle_ms = 0.0;
  long deadline_breaches = 0;
};

struct RunOptions {
  bool no_control = false;
  std::optional<std::uint64_t> seed_override;
  std::optional<bool> telemetry_override;
  std::string out_dir;        // empty: keep the log in memory only
  std::string scenario_path;  // recorded + hashed into the manifest when set
  /// Monotonic clock for the per-cycle deadline check; tests inject a fake.
  std::function<double()> now_fn;
};

/// Closed loop: LS bootstrap from the bootstrap segment, then per second
/// power flow + noisy measurement, and every control period an RLS update,
/// persistence forecasts, the robust QP and actuation with fallback.
/// Deterministic for a fixed scenario + seed (timing values aside).
RunLog run_day(const scenario::ScenarioConfig& cfg, const RunOptions& opts = {});

/// Replay with every plant at its MPP and q = 0; no estimation or control.
RunLog no_control_baseline(const scenario::ScenarioConfig& cfg,
                           const RunOptions& opts = {});

/// Write the CSV log set + manifest into out_dir (run_day calls this when
/// out_dir is set; exposed for tests).
void write_run_log(const RunLog& log, const scenario::ScenarioConfig& cfg,
                   const std::string& scenario_path, const std::string& out_dir,
                   const std::string& mode);

}  // namespace rvc::sim
