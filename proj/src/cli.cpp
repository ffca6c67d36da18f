#include "rvc/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rvc/control.hpp"
#include "rvc/errors.hpp"
#include "rvc/harness.hpp"
#include "rvc/logging.hpp"
#include "rvc/metrics.hpp"
#include "rvc/profile_gen.hpp"
#include "rvc/scenario.hpp"

namespace rvc::cli {

namespace {

namespace fs = std::filesystem;

std::string resolve_out_dir(const std::string& out) {
  fs::path p(out);
  const char* root = std::getenv("RVCSIM_OUT_ROOT");
  if (root != nullptr && *root != '\0' && p.is_relative()) return (fs::path(root) / p).string();
  return out;
}

int cmd_run(const std::string& scenario_path, const std::string& out,
            long long seed, bool no_control, int telemetry) {
  if (!fs::exists(scenario_path)) {
    std::fprintf(stderr, "error: scenario file not found: %s\n", scenario_path.c_str());
    return 2;
  }
  const auto cfg = scenario::ScenarioConfig::from_json_file(scenario_path);
  sim::RunOptions opts;
  opts.no_control = no_control;
  opts.out_dir = resolve_out_dir(out);
  opts.scenario_path = scenario_path;
  if (seed >= 0) opts.seed_override = static_cast<std::uint64_t>(seed);
  if (telemetry >= 0) opts.telemetry_override = telemetry != 0;

  const auto log = sim::run_day(cfg, opts);
  std::printf("run: %ld s simulated, %zu control cycles, mode=%s\n", log.steps,
              log.cycles.size(), no_control ? "baseline" : "control");
  if (!log.cycles.empty())
    std::printf("run: mean cycle %.2f ms, max %.2f ms, deadline breaches %ld\n",
                log.mean_cycle_ms, log.max_cycle_ms, log.deadline_breaches);
  if (!log.completed) {
    std::fprintf(stderr, "error: run aborted: %s\n", log.abort_reason.c_str());
    return 1;
  }
  std::printf("run: logs written to %s\n", opts.out_dir.c_str());
  return 0;
}

struct PairSeries {
  std::vector<double> truth, hat, delta;
};

int cmd_metrics(const std::string& run_dir, double alpha, double nu,
                const std::string& convention) {
  const auto est_path = (fs::path(run_dir) / "estimates.csv").string();
  const auto orc_path = (fs::path(run_dir) / "oracle.csv").string();
  if (!fs::exists(est_path) || !fs::exists(orc_path)) {
    std::fprintf(stderr, "error: %s must contain estimates.csv and oracle.csv\n",
                 run_dir.c_str());
    return 2;
  }
  const auto est = logio::read_csv(est_path);
  const auto orc = logio::read_csv(orc_path);
  if (est.rows.empty() || orc.rows.empty()) {
    std::fprintf(stderr, "error: empty log\n");
    return 2;
  }
  if (est.rows.size() != orc.rows.size()) {
    std::fprintf(stderr, "error: mismatched log lengths (%zu estimate rows, %zu oracle rows)\n",
                 est.rows.size(), orc.rows.size());
    return 2;
  }

  const int ei = est.col("i_bus"), ej = est.col("j_bus"), eh = est.col("kp_hat"),
            ed = est.col("kp_delta");
  const int oi = orc.col("i_bus"), oj = orc.col("j_bus"), ot = orc.col("kp_true");
  if (ei < 0 || ej < 0 || eh < 0 || ed < 0 || oi < 0 || oj < 0 || ot < 0) {
    std::fprintf(stderr, "error: unexpected log schema\n");
    return 2;
  }

  std::map<std::pair<int, int>, PairSeries> series;
  for (std::size_t r = 0; r < est.rows.size(); ++r) {
    const auto key = std::make_pair(static_cast<int>(est.num(r, ei)),
                                    static_cast<int>(est.num(r, ej)));
    const auto okey = std::make_pair(static_cast<int>(orc.num(r, oi)),
                                     static_cast<int>(orc.num(r, oj)));
    if (key != okey) {
      std::fprintf(stderr, "error: estimate/oracle rows out of step at row %zu\n", r);
      return 2;
    }
    auto& s = series[key];
    s.truth.push_back(orc.num(r, ot));
    s.hat.push_back(est.num(r, eh));
    s.delta.push_back(est.num(r, ed));
  }

  const auto conv = convention == "printed" ? metrics::CwcConvention::AsPrinted
                                            : metrics::CwcConvention::CoveragePenalty;
  logio::CsvWriter w((fs::path(run_dir) / "metrics.csv").string(), "rvc-metrics/1",
                     {"coefficient", "i_bus", "j_bus", "rmse", "picp", "cwc", "pinaw"});
  std::printf("%-12s %8s   %s\n", "Coefficient", "RMSE", "PICP-CWC-PINAW");
  for (const auto& [key, s] : series) {
    metrics::IntervalSeries is;
    const auto m = static_cast<Eigen::Index>(s.truth.size());
    is.truth = Eigen::Map<const Eigen::VectorXd>(s.truth.data(), m);
    is.hat = Eigen::Map<const Eigen::VectorXd>(s.hat.data(), m);
    is.half_width = Eigen::Map<const Eigen::VectorXd>(s.delta.data(), m);
    const double r = metrics::rmse(is.truth, is.hat);
    const double p = metrics::picp(is);
    const double width = metrics::pinaw(is);
    const double c = metrics::cwc(p, width, alpha, nu, conv);
    const std::string name =
        "Kp_" + std::to_string(key.first) + "," + std::to_string(key.second);
    logio::CsvRow row;
    row.add(name).add(key.first).add(key.second).add(r).add(p).add(c).add(width);
    w.write(row);
    std::printf("%-12s %8.3f   %.3g - %.3g - %.3g\n", name.c_str(), r, p, c, width);
  }
  return 0;
}

int cmd_verify(const std::string& run_dir, const std::string& scenario_path) {
  const auto ctl_path = (fs::path(run_dir) / "control.csv").string();
  const auto ctx_path = (fs::path(run_dir) / "vctx.csv").string();
  if (!fs::exists(ctl_path) || !fs::exists(ctx_path) || !fs::exists(scenario_path)) {
    std::fprintf(stderr, "error: need control.csv, vctx.csv and the scenario file\n");
    return 2;
  }
  const auto cfg = scenario::ScenarioConfig::from_json_file(scenario_path);
  const auto ctl = logio::read_csv(ctl_path);
  const auto ctx = logio::read_csv(ctx_path);
  if (ctl.rows.empty() || ctx.rows.empty()) {
    std::fprintf(stderr, "error: empty log\n");
    return 2;
  }

  const int ct = ctl.col("t"), cbus = ctl.col("bus"), cp = ctl.col("p_cmd_w"),
            cq = ctl.col("q_cmd_var"), cpm = ctl.col("p_meas_w"), cqm = ctl.col("q_meas_var");
  const int xt = ctx.col("t"), xnode = ctx.col("node_bus"), xv = ctx.col("v_meas"),
            xpl = ctx.col("plant_bus"), xkp = ctx.col("kp_hat"), xdp = ctx.col("kp_delta"),
            xkq = ctx.col("kq_hat"), xdq = ctx.col("kq_delta");

  // plant order as configured
  std::vector<int> plant_buses;
  for (const auto& pl : cfg.plants) plant_buses.push_back(pl.config.bus_id);
  const int np = static_cast<int>(plant_buses.size());

  struct Cycle {
    std::vector<int> node_bus;
    std::vector<double> v;
    Eigen::MatrixXd kp, dkp, kq, dkq;  // node x plant
    Eigen::VectorXd p_cmd, q_cmd, p_meas, q_meas;
  };
  std::map<long, Cycle> cycles;

  for (std::size_t r = 0; r < ctx.rows.size(); ++r) {
    const long t = static_cast<long>(ctx.num(r, xt));
    auto& cy = cycles[t];
    const int node = static_cast<int>(ctx.num(r, xnode));
    int ni = -1;
    for (std::size_t i = 0; i < cy.node_bus.size(); ++i)
      if (cy.node_bus[i] == node) ni = static_cast<int>(i);
    if (ni < 0) {
      ni = static_cast<int>(cy.node_bus.size());
      cy.node_bus.push_back(node);
      cy.v.push_back(ctx.num(r, xv));
      cy.kp.conservativeResize(ni + 1, np);
      cy.dkp.conservativeResize(ni + 1, np);
      cy.kq.conservativeResize(ni + 1, np);
      cy.dkq.conservativeResize(ni + 1, np);
    }
    const int pb = static_cast<int>(ctx.num(r, xpl));
    int k = -1;
    for (int kk = 0; kk < np; ++kk)
      if (plant_buses[static_cast<std::size_t>(kk)] == pb) k = kk;
    if (k < 0) continue;
    cy.kp(ni, k) = ctx.num(r, xkp);
    cy.dkp(ni, k) = ctx.num(r, xdp);
    cy.kq(ni, k) = ctx.num(r, xkq);
    cy.dkq(ni, k) = ctx.num(r, xdq);
  }
  for (std::size_t r = 0; r < ctl.rows.size(); ++r) {
    const long t = static_cast<long>(ctl.num(r, ct));
    auto it = cycles.find(t);
    if (it == cycles.end()) continue;
    auto& cy = it->second;
    if (cy.p_cmd.size() == 0) {
      cy.p_cmd.setZero(np);
      cy.q_cmd.setZero(np);
      cy.p_meas.setZero(np);
      cy.q_meas.setZero(np);
    }
    const int pb = static_cast<int>(ctl.num(r, cbus));
    for (int k = 0; k < np; ++k) {
      if (plant_buses[static_cast<std::size_t>(k)] != pb) continue;
      cy.p_cmd(k) = ctl.num(r, cp);
      cy.q_cmd(k) = ctl.num(r, cq);
      cy.p_meas(k) = ctl.num(r, cpm);
      cy.q_meas(k) = ctl.num(r, cqm);
    }
  }

  const auto cfg_net = grid::NetworkModel::from_json_file(cfg.resolve(cfg.network_file));
  const double s_base = cfg_net.s_base_va;
  logio::CsvWriter w((fs::path(run_dir) / "verify.csv").string(), "rvc-verify/1",
                     {"t", "node_bus", "worst_high", "worst_low"});
  double global_worst = 0.0;
  long violations = 0, audited = 0;
  for (auto& [t, cy] : cycles) {
    if (cy.p_cmd.size() == 0) continue;
    const int n = static_cast<int>(cy.node_bus.size());
    ctrl::RobustControlProblem pr;
    pr.v_prev = Eigen::Map<Eigen::VectorXd>(cy.v.data(), n);
    pr.xi = Eigen::VectorXd::Constant(
        n, cfg.control.xi < 0 ? static_cast<double>(np) : cfg.control.xi);
    pr.v_min = cfg.control.v_min;
    pr.v_max = cfg.control.v_max;
    std::vector<ctrl::PvPlantConfig> plants;
    for (const auto& pl : cfg.plants) plants.push_back(pl.config);
    for (int k = 0; k < np; ++k) pr.plant_col.push_back(k);  // synthetic columns
    for (int i = 0; i < n; ++i) {
      est::SensitivityEstimate e;
      e.kp_hat = Eigen::VectorXd::Zero(n);
      e.kq_hat = Eigen::VectorXd::Zero(n);
      e.dkp = Eigen::VectorXd::Zero(n);
      e.dkq = Eigen::VectorXd::Zero(n);
      for (int k = 0; k < np && k < n; ++k) {
        e.kp_hat(k) = cy.kp(i, k);
        e.dkp(k) = cy.dkp(i, k);
        e.kq_hat(k) = cy.kq(i, k);
        e.dkq(k) = cy.dkq(i, k);
      }
      pr.estimates.push_back(e);
    }
    pr.p_meas_w = cy.p_meas;
    pr.q_meas_var = cy.q_meas;
    pr.mpp_w = cy.p_cmd.cwiseMax(0.0);
    ctrl::Setpoint sp;
    sp.p_pv_w = cy.p_cmd;
    sp.q_pv_var = cy.q_cmd;
    const auto rep = ctrl::verify_robustness(pr, plants, s_base, sp);
    ++audited;
    for (int i = 0; i < n; ++i) {
      logio::CsvRow row;
      row.add(t).add(cy.node_bus[static_cast<std::size_t>(i)]).add(rep.worst_high(i)).add(
          rep.worst_low(i));
      w.write(row);
      global_worst = std::max(global_worst, rep.worst_high(i));
      if (rep.worst_high(i) > cfg.control.v_max + 1e-6) ++violations;
    }
  }
  std::printf("verify: %ld cycles audited, worst-case max voltage %.6f pu, "
              "%ld node-cycles above v_max=%.4f\n",
              audited, global_worst, violations, cfg.control.v_max);
  return 0;
}

int cmd_gen(const std::string& out, long long seed, long duration) {
  gen::BundleOptions g;
  g.dir = resolve_out_dir(out);
  if (seed >= 0) g.seed = static_cast<std::uint64_t>(seed);
  g.duration_s = duration;
  const auto path = gen::write_bundle(g);
  std::printf("gen: scenario bundle written: %s\n", path.c_str());
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Model-less robust voltage control simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir = "out", run_dir, convention = "default";
  long long seed = -1;
  long duration = 86400;
  bool no_control = false;
  int telemetry = -1;
  double alpha = 0.99, nu = 50.0;

  auto* run = app.add_subcommand("run", "Simulate a scenario day");
  run->add_option("scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_flag("--no-control", no_control, "baseline replay at MPP, no controller");
  run->add_option("--telemetry", telemetry, "1 = publish UDP telemetry, 0 = off");

  auto* met = app.add_subcommand("metrics", "Estimation metrics from a run log");
  met->add_option("run_dir", run_dir, "directory with estimates.csv/oracle.csv")->required();
  met->add_option("--alpha", alpha, "confidence level");
  met->add_option("--nu", nu, "CWC amplification");
  met->add_option("--convention", convention, "CWC eta convention: default|printed");

  auto* ver = app.add_subcommand("verify", "Robustness audit of a run log");
  ver->add_option("run_dir", run_dir, "directory with control.csv/vctx.csv")->required();
  ver->add_option("--scenario", scenario_path, "scenario JSON file")->required();

  auto* gen = app.add_subcommand("gen", "Write the bundled feeder scenario");
  gen->add_option("--out", out_dir, "bundle directory")->required();
  gen->add_option("--seed", seed, "profile generator seed");
  gen->add_option("--duration", duration, "profile length in seconds");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(scenario_path, out_dir, seed, no_control, telemetry);
    if (met->parsed()) return cmd_metrics(run_dir, alpha, nu, convention);
    if (ver->parsed()) return cmd_verify(run_dir, scenario_path);
    if (gen->parsed()) return cmd_gen(out_dir, seed, duration);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}

}  // namespace rvc::cli
