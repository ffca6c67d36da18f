#include "rvc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <filesystem>
#include <mutex>
#include <thread>

#include "rvc/errors.hpp"
#include "rvc/logging.hpp"
#include "rvc/manifest.hpp"
#include "rvc/profiles.hpp"
#include "rvc/telemetry.hpp"
#include "rvc/udp.hpp"

namespace rvc::sim {

using grid::GridState;
using grid::NetworkModel;
using scenario::ScenarioConfig;

MeasurementSample apply_noise(const MeasurementSample& truth,
                              const scenario::NoiseParams& params,
                              GaussianSampler& rng) {
  if (params.voltage_class_pct < 0.0 || params.power_class_pct < 0.0)
    throw ConfigError("noise", "transducer classes must be >= 0");
  MeasurementSample out = truth;
  if (!params.enabled) return out;
  const double sv = params.sigma_v();
  const double sp = params.sigma_power();
  for (Eigen::Index i = 0; i < out.v_pu.size(); ++i) out.v_pu(i) *= 1.0 + sv * rng();
  for (Eigen::Index i = 0; i < out.p_w.size(); ++i) out.p_w(i) *= 1.0 + sp * rng();
  for (Eigen::Index i = 0; i < out.q_var.size(); ++i) out.q_var(i) *= 1.0 + sp * rng();
  return out;
}

namespace {

struct PlantRuntime {
  scenario::PlantSpec spec;
  int bus_pos = 0;   // position among all buses
  int col = 0;       // position among non-slack buses
};

std::pair<double, double> actuate(const ctrl::PvPlantConfig& pl, double p_cmd_w,
                                  double q_cmd_var, double mpp_true_w) {
  const double p = std::clamp(std::min(p_cmd_w, mpp_true_w), 0.0, pl.s_max_va);
  double q = 0.0;
  if (pl.reactive_capable) {
    const double zcap = pl.zeta() * p;
    q = std::clamp(q_cmd_var, -zcap, zcap);
    const double qmax = std::sqrt(std::max(0.0, pl.s_max_va * pl.s_max_va - p * p));
    q = std::clamp(q, -qmax, qmax);
  }
  return {p, q};
}

/// Loopback self-test consumer: receives, decodes and concentrates what the
/// run publishes. Counters are read after stop().
class TelemetrySink {
 public:
  TelemetrySink(std::vector<std::uint8_t> sensor_ids, int window_ms)
      : receiver_(0, 4 << 20),
        concentrator_(std::move(sensor_ids), static_cast<std::uint64_t>(window_ms)) {
    thread_ = std::thread([this] { loop(); });
  }

  ~TelemetrySink() { stop(); }

  std::uint16_t port() const { return receiver_.port(); }

  void stop() {
    if (!stopped_.exchange(true)) {
      if (thread_.joinable()) thread_.join();
      std::lock_guard lock(mu_);
      for (const auto& f : concentrator_.drain()) count_frame(f);
    }
  }

  std::uint64_t crc_failures() const { return crc_failures_; }
  std::uint64_t frames_complete() const { return frames_complete_; }
  std::uint64_t frames_partial() const { return frames_partial_; }

 private:
  void count_frame(const telemetry::AlignedFrame& f) {
    if (f.complete)
      ++frames_complete_;
    else
      ++frames_partial_;
  }

  void loop() {
    int idle = 0;
    while (!stopped_ || idle < 3) {
      auto pkt = receiver_.receive(20);
      if (!pkt.has_value()) {
        ++idle;
        continue;
      }
      idle = 0;
      const auto d = telemetry::decode({pkt->data(), pkt->size()});
      if (!d.has_value()) {
        ++crc_failures_;
        continue;
      }
      std::lock_guard lock(mu_);
      for (const auto& f : concentrator_.push(*d, d->timestamp_ms)) count_frame(f);
    }
  }

  telemetry::UdpReceiver receiver_;
  telemetry::Concentrator concentrator_;
  std::thread thread_;
  std::atomic<bool> stopped_{false};
  std::mutex mu_;
  std::uint64_t crc_failures_ = 0;
  std::uint64_t frames_complete_ = 0;
  std::uint64_t frames_partial_ = 0;
};

struct LoopContext {
  NetworkModel model;
  std::vector<int> nonslack_pos;
  std::vector<PlantRuntime> plants;
  profiles::UncontrollableProfile unc;
  profiles::SlackProfile slack;
  profiles::WeatherProfile weather;
  std::vector<int> unc_cols;  // non-slack column of each profile bus
};

LoopContext load_context(const ScenarioConfig& cfg) {
  LoopContext ctx;
  ctx.model = NetworkModel::from_json_file(cfg.resolve(cfg.network_file));
  ctx.nonslack_pos = ctx.model.non_slack_positions();

  for (const auto& spec : cfg.plants) {
    PlantRuntime pr;
    pr.spec = spec;
    pr.bus_pos = ctx.model.position_of(spec.config.bus_id);
    if (pr.bus_pos < 0)
      throw ConfigError("plants.bus",
                        "bus " + std::to_string(spec.config.bus_id) + " not in network");
    pr.col = -1;
    for (size_t k = 0; k < ctx.nonslack_pos.size(); ++k)
      if (ctx.nonslack_pos[k] == pr.bus_pos) pr.col = static_cast<int>(k);
    if (pr.col < 0) throw ConfigError("plants.bus", "plant cannot sit on the slack bus");
    ctx.plants.push_back(pr);
  }

  ctx.unc = profiles::read_uncontrollable(cfg.resolve(cfg.profiles.uncontrollable_file));
  ctx.slack = profiles::read_slack(cfg.resolve(cfg.profiles.slack_file));
  ctx.weather = profiles::read_weather(cfg.resolve(cfg.profiles.weather_file));

  const auto steps = static_cast<std::size_t>(cfg.timing.duration_s);
  profiles::check_contiguous(ctx.unc.t, cfg.timing.sample_period_s, steps, "uncontrollable");
  profiles::check_contiguous(ctx.slack.t, cfg.timing.sample_period_s, steps, "slack");
  profiles::check_contiguous(ctx.weather.t, cfg.timing.sample_period_s, steps, "weather");

  for (int b : ctx.unc.bus_ids) {
    const int pos = ctx.model.position_of(b);
    if (pos < 0)
      throw ConfigError("profiles", "uncontrollable bus " + std::to_string(b) +
                                        " not in network");
    int col = -1;
    for (size_t k = 0; k < ctx.nonslack_pos.size(); ++k)
      if (ctx.nonslack_pos[k] == pos) col = static_cast<int>(k);
    if (col < 0) throw ConfigError("profiles", "uncontrollable injection on the slack bus");
    ctx.unc_cols.push_back(col);
  }
  return ctx;
}

/// One simulated second: apply injections, solve the flow, measure.
struct SecondResult {
  GridState state;
  MeasurementSample truth;
  MeasurementSample meas;
};

SecondResult simulate_second(const LoopContext& ctx, const ScenarioConfig& cfg,
                             double t, double slack_v,
                             const forecast::WeatherSample& weather,
                             const Eigen::VectorXd& plant_p_w,
                             const Eigen::VectorXd& plant_q_var,
                             const Eigen::VectorXd& unc_p_w,
                             const Eigen::VectorXd& unc_q_var, GaussianSampler& rng) {
  const int nb = static_cast<int>(ctx.nonslack_pos.size());
  Eigen::VectorXd p_w = unc_p_w, q_var = unc_q_var;
  for (size_t k = 0; k < ctx.plants.size(); ++k) {
    p_w(ctx.plants[k].col) += plant_p_w(static_cast<Eigen::Index>(k));
    q_var(ctx.plants[k].col) += plant_q_var(static_cast<Eigen::Index>(k));
  }

  SecondResult r;
  r.state = grid::solve_power_flow(ctx.model, p_w / ctx.model.s_base_va,
                                   q_var / ctx.model.s_base_va, slack_v);
  r.truth.t = t;
  r.truth.v_pu = r.state.v_mag;
  r.truth.p_w = r.state.p_inj * ctx.model.s_base_va;
  r.truth.q_var = r.state.q_inj * ctx.model.s_base_va;
  r.truth.weather = weather;
  r.meas = apply_noise(r.truth, cfg.noise, rng);
  (void)nb;
  return r;
}

Eigen::RowVectorXd regression_row(const LoopContext& ctx, const MeasurementSample& prev,
                                  const MeasurementSample& cur) {
  const int nb = static_cast<int>(ctx.nonslack_pos.size());
  Eigen::RowVectorXd h(2 * nb);
  for (int k = 0; k < nb; ++k) {
    const int pos = ctx.nonslack_pos[static_cast<size_t>(k)];
    h(k) = (cur.p_w(pos) - prev.p_w(pos)) / ctx.model.s_base_va;
    h(nb + k) = (cur.q_var(pos) - prev.q_var(pos)) / ctx.model.s_base_va;
  }
  return h;
}

Eigen::VectorXd gamma_vector(const LoopContext& ctx, const MeasurementSample& prev,
                             const MeasurementSample& cur) {
  const int nb = static_cast<int>(ctx.nonslack_pos.size());
  Eigen::VectorXd g(nb);
  for (int k = 0; k < nb; ++k) {
    const int pos = ctx.nonslack_pos[static_cast<size_t>(k)];
    g(k) = cur.v_pu(pos) - prev.v_pu(pos);
  }
  return g;
}

}  // namespace

RunLog run_day(const ScenarioConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  LoopContext ctx = load_context(cfg);
  const int nb = static_cast<int>(ctx.nonslack_pos.size());
  const int n_buses = ctx.model.n_buses();
  const int np = static_cast<int>(ctx.plants.size());
  const long duration = cfg.timing.duration_s;
  const int period = cfg.timing.control_period_s;
  const double s_base = ctx.model.s_base_va;
  const bool controlled = !opts.no_control;

  const std::uint64_t seed = opts.seed_override.value_or(cfg.seed);
  GaussianSampler rng(seed);
  std::function<double()> now_fn = opts.now_fn;
  if (!now_fn)
    now_fn = [] {
      return std::chrono::duration<double>(
                 std::chrono::steady_clock::now().time_since_epoch())
          .count();
    };

  RunLog log;
  log.seed_used = seed;
  for (const auto& b : ctx.model.buses) log.bus_ids.push_back(b.id);
  for (int pos : ctx.nonslack_pos)
    log.nonslack_ids.push_back(ctx.model.buses[static_cast<size_t>(pos)].id);
  log.v_true.resize(duration, n_buses);
  log.v_meas.resize(duration, n_buses);

  // telemetry: explicit port publishes outward; port 0 runs a loopback
  // self-test consumer
  const bool telemetry_on = opts.telemetry_override.value_or(cfg.telemetry.enabled);
  std::vector<int> sensor_buses = cfg.telemetry.sensor_buses;
  if (sensor_buses.empty()) sensor_buses = log.bus_ids;
  std::unique_ptr<TelemetrySink> sink;
  std::unique_ptr<telemetry::UdpPublisher> publisher;
  if (telemetry_on) {
    std::vector<std::uint8_t> ids;
    for (int b : sensor_buses) ids.push_back(static_cast<std::uint8_t>(b));
    int port = cfg.telemetry.port;
    if (port == 0) {
      sink = std::make_unique<TelemetrySink>(ids, cfg.telemetry.window_ms);
      port = sink->port();
    }
    publisher = std::make_unique<telemetry::UdpPublisher>(
        cfg.telemetry.host, static_cast<std::uint16_t>(port));
  }

  // ---- bootstrap: simulate the excitation segment and run the LS stage ----
  est::EstimatorBank bank;
  est::EstimatorBank::Config bank_cfg;
  bank_cfg.mode = cfg.estimator.mode;
  bank_cfg.mu = cfg.estimator.mu;
  bank_cfg.lambda_reg = cfg.estimator.lambda_reg;
  bank_cfg.sf.tau_min = cfg.estimator.tau_min;
  bank_cfg.sf.tau_max = cfg.estimator.tau_max;
  bank_cfg.sf.tau_rule = cfg.estimator.tau_rule;
  bank_cfg.f.cov_cap = cfg.estimator.cov_cap;

  if (controlled) {
    const auto boot_unc =
        profiles::read_uncontrollable(cfg.resolve(cfg.bootstrap.files.uncontrollable_file));
    const auto boot_slack = profiles::read_slack(cfg.resolve(cfg.bootstrap.files.slack_file));
    const auto boot_weather =
        profiles::read_weather(cfg.resolve(cfg.bootstrap.files.weather_file));
    const std::size_t boot_steps = static_cast<std::size_t>(cfg.timing.window_samples) + 1;
    profiles::check_contiguous(boot_slack.t, cfg.timing.sample_period_s, boot_steps,
                               "bootstrap slack");
    profiles::check_contiguous(boot_weather.t, cfg.timing.sample_period_s, boot_steps,
                               "bootstrap weather");
    profiles::check_contiguous(boot_unc.t, cfg.timing.sample_period_s, boot_steps,
                               "bootstrap uncontrollable");
    std::vector<int> boot_cols;
    for (int b : boot_unc.bus_ids) {
      const int pos = ctx.model.position_of(b);
      int col = -1;
      for (size_t k = 0; k < ctx.nonslack_pos.size(); ++k)
        if (ctx.nonslack_pos[k] == pos) col = static_cast<int>(k);
      if (col < 0) throw ConfigError("bootstrap", "bad uncontrollable bus");
      boot_cols.push_back(col);
    }

    const int m = cfg.timing.window_samples;
    Eigen::MatrixXd h_rows(m, 2 * nb);
    Eigen::MatrixXd gammas(m, nb);
    std::vector<double> ts;
    MeasurementSample prev;
    for (std::size_t s = 0; s < boot_steps; ++s) {
      forecast::WeatherSample w;
      w.ghi_w_m2 = boot_weather.ghi_w_m2[s];
      w.air_temp_c = boot_weather.temp_c[s];
      w.timestamp_s = boot_weather.t[s];
      Eigen::VectorXd plant_p(np), plant_q = Eigen::VectorXd::Zero(np);
      for (int k = 0; k < np; ++k) {
        const auto& pl = ctx.plants[static_cast<size_t>(k)];
        double mpp = forecast::mpp_from_weather(pl.spec.pv_model, w, pl.spec.config.s_max_va);
        double cmd = mpp;
        if (cfg.bootstrap.dither_w > 0.0)
          cmd = std::clamp(mpp + cfg.bootstrap.dither_w * rng(), 0.0, mpp);
        plant_p(k) = actuate(pl.spec.config, cmd, 0.0, mpp).first;
      }
      Eigen::VectorXd unc_p = Eigen::VectorXd::Zero(nb), unc_q = Eigen::VectorXd::Zero(nb);
      for (size_t ub = 0; ub < boot_cols.size(); ++ub) {
        unc_p(boot_cols[ub]) += boot_unc.p_w[ub][s];
        unc_q(boot_cols[ub]) += boot_unc.q_var[ub][s];
      }
      const auto r = simulate_second(ctx, cfg, boot_slack.t[s], boot_slack.v_pu[s], w,
                                     plant_p, plant_q, unc_p, unc_q, rng);
      if (s > 0) {
        h_rows.row(static_cast<Eigen::Index>(s - 1)) = regression_row(ctx, prev, r.meas);
        gammas.row(static_cast<Eigen::Index>(s - 1)) =
            gamma_vector(ctx, prev, r.meas).transpose();
        ts.push_back(static_cast<double>(s - 1));
      }
      prev = r.meas;
    }
    bank.bootstrap(h_rows, gammas, ts, bank_cfg, cfg.timing.sample_period_s);
  }

  // ---- main loop ----
  Eigen::VectorXd p_cmd = Eigen::VectorXd::Zero(np);  // before the first cycle
  Eigen::VectorXd q_cmd = Eigen::VectorXd::Zero(np);
  std::deque<Eigen::RowVectorXd> window_h;
  std::vector<std::pair<Eigen::RowVectorXd, Eigen::VectorXd>> pending_rows;
  bool have_prev = false;
  MeasurementSample prev_meas;
  double compute_ms_sum = 0.0;
  log.completed = true;

  const double alpha = cfg.estimator.alpha;
  std::vector<int> report_cols;
  for (int bus : cfg.report.nodes) {
    const int pos = ctx.model.position_of(bus);
    int col = -1;
    for (size_t k = 0; k < ctx.nonslack_pos.size(); ++k)
      if (ctx.nonslack_pos[k] == pos) col = static_cast<int>(k);
    if (col < 0) throw ConfigError("report.nodes", "unknown or slack bus");
    report_cols.push_back(col);
  }

  for (long t = 0; t < duration; ++t) {
    const auto s = static_cast<std::size_t>(t);
    forecast::WeatherSample w;
    w.ghi_w_m2 = ctx.weather.ghi_w_m2[s];
    w.air_temp_c = ctx.weather.temp_c[s];
    w.timestamp_s = ctx.weather.t[s];

    Eigen::VectorXd plant_p(np), plant_q(np);
    for (int k = 0; k < np; ++k) {
      const auto& pl = ctx.plants[static_cast<size_t>(k)];
      const double mpp_true =
          forecast::mpp_from_weather(pl.spec.pv_model, w, pl.spec.config.s_max_va);
      double cp, cq;
      if (controlled) {
        std::tie(cp, cq) = actuate(pl.spec.config, p_cmd(k), q_cmd(k), mpp_true);
      } else {
        std::tie(cp, cq) = actuate(pl.spec.config, mpp_true, 0.0, mpp_true);
      }
      plant_p(k) = cp;
      plant_q(k) = cq;
    }
    Eigen::VectorXd unc_p = Eigen::VectorXd::Zero(nb), unc_q = Eigen::VectorXd::Zero(nb);
    for (size_t ub = 0; ub < ctx.unc_cols.size(); ++ub) {
      unc_p(ctx.unc_cols[ub]) += ctx.unc.p_w[ub][s];
      unc_q(ctx.unc_cols[ub]) += ctx.unc.q_var[ub][s];
    }

    SecondResult r;
    try {
      r = simulate_second(ctx, cfg, static_cast<double>(t), ctx.slack.v_pu[s], w,
                          plant_p, plant_q, unc_p, unc_q, rng);
    } catch (const Error& e) {
      log.completed = false;
      log.abort_reason = std::string("power flow diverged at t=") + std::to_string(t) +
                         ": " + e.what();
      log.v_true.conservativeResize(t, Eigen::NoChange);
      log.v_meas.conservativeResize(t, Eigen::NoChange);
      log.steps = t;
      break;
    }

    log.v_true.row(t) = r.truth.v_pu.transpose();
    log.v_meas.row(t) = r.meas.v_pu.transpose();
    log.steps = t + 1;

    if (have_prev) {
      Eigen::RowVectorXd h = regression_row(ctx, prev_meas, r.meas);
      pending_rows.emplace_back(h, gamma_vector(ctx, prev_meas, r.meas));
      window_h.push_back(h);
      while (static_cast<int>(window_h.size()) > cfg.timing.window_samples)
        window_h.pop_front();
    }

    if (publisher) {
      for (int bus : sensor_buses) {
        const int pos = ctx.model.position_of(bus);
        if (pos < 0) continue;
        telemetry::MeasurementDatagram d;
        d.sensor_id = static_cast<std::uint8_t>(bus);
        d.bus_index = static_cast<std::uint16_t>(bus);
        d.timestamp_ms = static_cast<std::uint64_t>(t) * 1000ull;
        d.v_mag_pu = r.meas.v_pu(pos);
        d.p_w = r.meas.p_w(pos);
        d.q_var = r.meas.q_var(pos);
        if (publisher->send(telemetry::encode(d)))
          ++log.telemetry_sent;
        else
          ++log.telemetry_send_errors;
      }
    }

    if (controlled && (t + 1) % period == 0) {
      const double t0 = now_fn();

      for (const auto& [h, g] : pending_rows) bank.update(h, g);
      pending_rows.clear();

      CycleRecord rec;
      rec.t = t;
      rec.v_meas = Eigen::VectorXd(nb);
      for (int k = 0; k < nb; ++k)
        rec.v_meas(k) = r.meas.v_pu(ctx.nonslack_pos[static_cast<size_t>(k)]);

      // rank flag over the trailing window (night-time low-excitation marker)
      if (!window_h.empty()) {
        Eigen::MatrixXd hw(static_cast<Eigen::Index>(window_h.size()), 2 * nb);
        for (size_t i = 0; i < window_h.size(); ++i)
          hw.row(static_cast<Eigen::Index>(i)) = window_h[i];
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(hw);
        qr.setThreshold(1e-10);
        rec.rank_deficient = qr.rank() < 2 * nb;
      }

      ctrl::RobustControlProblem prob;
      prob.v_prev = rec.v_meas;
      prob.estimates.reserve(static_cast<size_t>(nb));
      for (int k = 0; k < nb; ++k) prob.estimates.push_back(bank.estimate(k, alpha));
      for (int k = 0; k < np; ++k)
        prob.plant_col.push_back(ctx.plants[static_cast<size_t>(k)].col);
      prob.p_meas_w.resize(np);
      prob.q_meas_var.resize(np);
      prob.mpp_w.resize(np);

      // persistence forecasts from the latest (fresh) weather observation
      const double ghi_f = forecast::persistence_forecast(
          w.ghi_w_m2, w.timestamp_s, static_cast<double>(t), cfg.timing.sample_period_s);
      const double temp_f = forecast::persistence_forecast(
          w.air_temp_c, w.timestamp_s, static_cast<double>(t), cfg.timing.sample_period_s);
      forecast::WeatherSample wf;
      wf.ghi_w_m2 = ghi_f;
      wf.air_temp_c = temp_f;
      wf.timestamp_s = static_cast<double>(t);
      for (int k = 0; k < np; ++k) {
        const auto& pl = ctx.plants[static_cast<size_t>(k)];
        prob.p_meas_w(k) = r.meas.p_w(pl.bus_pos);
        prob.q_meas_var(k) = r.meas.q_var(pl.bus_pos);
        prob.mpp_w(k) =
            forecast::mpp_from_weather(pl.spec.pv_model, wf, pl.spec.config.s_max_va);
      }
      prob.v_min = cfg.control.v_min;
      prob.v_max = cfg.control.v_max;
      prob.voltage_margin = cfg.control.voltage_margin;
      const double xi = cfg.control.xi < 0.0 ? static_cast<double>(np) : cfg.control.xi;
      prob.xi = Eigen::VectorXd::Constant(nb, xi);
      prob.polygon_segments = cfg.control.polygon_segments;
      prob.formulation = cfg.control.formulation;

      std::vector<ctrl::PvPlantConfig> plant_cfgs;
      for (const auto& pl : ctx.plants) plant_cfgs.push_back(pl.spec.config);
      const auto sp = ctrl::solve_robust(prob, plant_cfgs, s_base);

      const double t1 = now_fn();
      rec.compute_ms = (t1 - t0) * 1000.0;
      compute_ms_sum += rec.compute_ms;
      log.max_cycle_ms = std::max(log.max_cycle_ms, rec.compute_ms);

      rec.status = sp.status;
      rec.p_solver_w = sp.p_pv_w;
      rec.q_solver_var = sp.q_pv_var;
      rec.objective = sp.objective;
      rec.qp_iterations = sp.iterations;
      rec.mpp_w = prob.mpp_w;
      rec.p_meas_w = prob.p_meas_w;
      rec.q_meas_var = prob.q_meas_var;

      if (rec.compute_ms > cfg.timing.compute_budget_s * 1000.0) {
        rec.applied = false;
        rec.hold_reason = "deadline";
        ++log.deadline_breaches;
      } else if (sp.status == qp::QpStatus::Infeasible) {
        rec.applied = false;
        rec.hold_reason = "infeasible";
      } else if (sp.status == qp::QpStatus::MaxIterations) {
        rec.applied = false;
        rec.hold_reason = "max_iterations";
      } else {
        p_cmd = sp.p_pv_w.cwiseMax(0.0);
        q_cmd = sp.q_pv_var;
      }
      rec.p_cmd_w = p_cmd;
      rec.q_cmd_var = q_cmd;

      // oracle snapshot + report rows
      const auto oracle = grid::oracle_sensitivities(ctx.model, r.state);
      for (size_t rn = 0; rn < report_cols.size(); ++rn) {
        const int col = report_cols[rn];
        rec.report_estimates.push_back(bank.estimate(col, alpha));
        rec.report_kp_true.push_back(oracle.kp.row(col).transpose());
        rec.report_kq_true.push_back(oracle.kq.row(col).transpose());
      }
      rec.kp_plant.resize(nb, np);
      rec.dkp_plant.resize(nb, np);
      rec.kq_plant.resize(nb, np);
      rec.dkq_plant.resize(nb, np);
      for (int i = 0; i < nb; ++i) {
        const auto& e = prob.estimates[static_cast<size_t>(i)];
        for (int k = 0; k < np; ++k) {
          const int col = prob.plant_col[static_cast<size_t>(k)];
          rec.kp_plant(i, k) = e.kp_hat(col);
          rec.dkp_plant(i, k) = e.dkp(col);
          rec.kq_plant(i, k) = e.kq_hat(col);
          rec.dkq_plant(i, k) = e.dkq(col);
        }
      }
      log.cycles.push_back(std::move(rec));
    }

    prev_meas = r.meas;
    have_prev = true;
  }

  if (!log.cycles.empty())
    log.mean_cycle_ms = compute_ms_sum / static_cast<double>(log.cycles.size());

  if (sink) {
    sink->stop();
    log.telemetry_crc_failures = sink->crc_failures();
    log.telemetry_frames_complete = sink->frames_complete();
    log.telemetry_frames_partial = sink->frames_partial();
  }

  if (!opts.out_dir.empty())
    write_run_log(log, cfg, opts.scenario_path, opts.out_dir,
                  controlled ? "control" : "baseline");
  return log;
}

RunLog no_control_baseline(const ScenarioConfig& cfg, const RunOptions& opts) {
  RunOptions o = opts;
  o.no_control = true;
  return run_day(cfg, o);
}

void write_run_log(const RunLog& log, const ScenarioConfig& cfg,
                   const std::string& scenario_path, const std::string& out_dir,
                   const std::string& mode) {
  namespace fs = std::filesystem;
  using logio::CsvRow;
  using logio::CsvWriter;
  fs::create_directories(out_dir);
  auto path = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };

  {
    std::vector<std::string> cols = {"t"};
    for (int b : log.bus_ids) cols.push_back("v_true_" + std::to_string(b));
    for (int b : log.bus_ids) cols.push_back("v_meas_" + std::to_string(b));
    CsvWriter w(path("measurements.csv"), "rvc-measurements/1", cols);
    for (long t = 0; t < log.steps; ++t) {
      CsvRow row;
      row.add(t);
      for (Eigen::Index c = 0; c < log.v_true.cols(); ++c) row.add(log.v_true(t, c), 12);
      for (Eigen::Index c = 0; c < log.v_meas.cols(); ++c) row.add(log.v_meas(t, c), 12);
      w.write(row);
    }
  }

  {
    CsvWriter w(path("control.csv"), "rvc-control/1",
                {"t", "plant", "bus", "p_cmd_w", "q_cmd_var", "p_solver_w",
                 "q_solver_var", "mpp_w", "p_meas_w", "q_meas_var", "status",
                 "applied", "hold_reason", "objective", "iterations",
                 "rank_deficient"});
    for (const auto& rec : log.cycles) {
      for (Eigen::Index k = 0; k < rec.p_cmd_w.size(); ++k) {
        const int bus = cfg.plants[static_cast<size_t>(k)].config.bus_id;
        CsvRow row;
        row.add(rec.t)
            .add(cfg.plants[static_cast<size_t>(k)].name)
            .add(bus)
            .add(rec.p_cmd_w(k))
            .add(rec.q_cmd_var(k))
            .add(rec.p_solver_w(k))
            .add(rec.q_solver_var(k))
            .add(rec.mpp_w(k))
            .add(rec.p_meas_w(k))
            .add(rec.q_meas_var(k))
            .add(rec.status == qp::QpStatus::Optimal
                     ? std::string("optimal")
                     : rec.status == qp::QpStatus::Infeasible
                           ? std::string("infeasible")
                           : std::string("max_iterations"))
            .add(rec.applied ? 1 : 0)
            .add(rec.hold_reason.empty() ? std::string("-") : rec.hold_reason)
            .add(rec.objective)
            .add(rec.qp_iterations)
            .add(rec.rank_deficient ? 1 : 0);
        w.write(row);
      }
    }
  }

  {
    CsvWriter w(path("estimates.csv"), "rvc-estimates/1",
                {"t", "i_bus", "j_bus", "kp_hat", "kp_delta", "kq_hat", "kq_delta"});
    for (const auto& rec : log.cycles) {
      for (size_t rn = 0; rn < rec.report_estimates.size(); ++rn) {
        const int i_bus = cfg.report.nodes[rn];
        const auto& e = rec.report_estimates[rn];
        for (Eigen::Index j = 0; j < e.kp_hat.size(); ++j) {
          CsvRow row;
          row.add(rec.t)
              .add(i_bus)
              .add(log.nonslack_ids[static_cast<size_t>(j)])
              .add(e.kp_hat(j))
              .add(e.dkp(j))
              .add(e.kq_hat(j))
              .add(e.dkq(j));
          w.write(row);
        }
      }
    }
  }

  {
    CsvWriter w(path("oracle.csv"), "rvc-oracle/1",
                {"t", "i_bus", "j_bus", "kp_true", "kq_true"});
    for (const auto& rec : log.cycles) {
      for (size_t rn = 0; rn < rec.report_kp_true.size(); ++rn) {
        const int i_bus = cfg.report.nodes[rn];
        for (Eigen::Index j = 0; j < rec.report_kp_true[rn].size(); ++j) {
          CsvRow row;
          row.add(rec.t)
              .add(i_bus)
              .add(log.nonslack_ids[static_cast<size_t>(j)])
              .add(rec.report_kp_true[rn](j))
              .add(rec.report_kq_true[rn](j));
          w.write(row);
        }
      }
    }
  }

  {
    CsvWriter w(path("vctx.csv"), "rvc-vctx/1",
                {"t", "node_bus", "v_meas", "plant_bus", "kp_hat", "kp_delta",
                 "kq_hat", "kq_delta"});
    for (const auto& rec : log.cycles) {
      for (Eigen::Index i = 0; i < rec.kp_plant.rows(); ++i) {
        for (Eigen::Index k = 0; k < rec.kp_plant.cols(); ++k) {
          CsvRow row;
          row.add(rec.t)
              .add(log.nonslack_ids[static_cast<size_t>(i)])
              .add(rec.v_meas(i))
              .add(cfg.plants[static_cast<size_t>(k)].config.bus_id)
              .add(rec.kp_plant(i, k))
              .add(rec.dkp_plant(i, k))
              .add(rec.kq_plant(i, k))
              .add(rec.dkq_plant(i, k));
          w.write(row);
        }
      }
    }
  }

  {
    // wall-clock values: excluded from the deterministic log set
    CsvWriter w(path("timing.csv"), "rvc-timing/1", {"t", "compute_ms", "deadline_breached"});
    for (const auto& rec : log.cycles) {
      CsvRow row;
      row.add(rec.t).add(rec.compute_ms, 6).add(rec.hold_reason == "deadline" ? 1 : 0);
      w.write(row);
    }
  }

  manifest::RunManifest m;
  m.scenario_path = scenario_path;
  if (!scenario_path.empty())
    m.scenario_hash = "fnv1a64:" + manifest::hash_hex(manifest::fnv1a64_file(scenario_path));
  m.seed = log.seed_used;
  m.mode = mode;
  m.outputs = {{"measurements", path("measurements.csv")},
               {"control", path("control.csv")},
               {"estimates", path("estimates.csv")},
               {"oracle", path("oracle.csv")},
               {"vctx", path("vctx.csv")},
               {"timing", path("timing.csv")}};
  m.cycles = static_cast<long>(log.cycles.size());
  m.mean_cycle_ms = log.mean_cycle_ms;
  m.max_cycle_ms = log.max_cycle_ms;
  m.deadline_breaches = log.deadline_breaches;
  m.telemetry_sent = log.telemetry_sent;
  m.telemetry_errors = log.telemetry_send_errors;
  m.completed = log.completed;
  m.write(path("manifest.json"));
}

}  // namespace rvc::sim
