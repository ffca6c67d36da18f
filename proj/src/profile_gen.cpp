#include "rvc/profile_gen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "rvc/errors.hpp"
#include "rvc/profiles.hpp"
#include "rvc/stats.hpp"

namespace rvc::gen {

namespace {

constexpr double kPi = 3.14159265358979323846;

double hours(double h) { return h * 3600.0; }

/// Piecewise-linear curve over anchor points (t_s, value).
double piecewise(const std::vector<std::pair<double, double>>& pts, double t) {
  if (t <= pts.front().first) return pts.front().second;
  for (size_t i = 1; i < pts.size(); ++i) {
    if (t <= pts[i].first) {
      const double f = (t - pts[i - 1].first) / (pts[i].first - pts[i - 1].first);
      return pts[i - 1].second + f * (pts[i].second - pts[i - 1].second);
    }
  }
  return pts.back().second;
}

/// Ornstein-Uhlenbeck jitter with white measurement-scale wobble on top.
class Jitter {
 public:
  Jitter(GaussianSampler& rng, double ou_sigma, double tau_s, double white_sigma)
      : rng_(rng), ou_sigma_(ou_sigma), tau_(tau_s), white_(white_sigma) {}

  double step() {
    const double dt = 1.0;
    x_ += (-x_ / tau_) * dt + ou_sigma_ * std::sqrt(dt) * rng_();
    return x_ + white_ * rng_();
  }

 private:
  GaussianSampler& rng_;
  double ou_sigma_;
  double tau_;
  double white_;
  double x_ = 0.0;
};

std::string network_json() {
  // Radial trunk B01 (slack) .. B11 with spurs B03->B12, B05->B13, B07->B14.
  // Segment impedances are representative LV cable values scaled so the
  // clear-sky PV peak pushes the feeder end above 1.04 pu without control.
  std::string out = R"({
  "schema": "rvc-network/1",
  "s_base_va": 100000.0,
  "v_base_v": 400.0,
  "buses": [
    {"id": 1, "type": "slack", "base_kv": 0.4},
)";
  for (int b = 2; b <= 14; ++b) {
    out += "    {\"id\": " + std::to_string(b) + ", \"type\": \"pq\", \"base_kv\": 0.4}";
    out += b < 14 ? ",\n" : "\n";
  }
  out += R"(  ],
  "branches": [
)";
  const double r = 0.016, x = 0.006, amp = 160.0;
  std::vector<std::pair<int, int>> edges;
  for (int b = 1; b < 11; ++b) edges.push_back({b, b + 1});
  edges.push_back({3, 12});
  edges.push_back({5, 13});
  edges.push_back({7, 14});
  for (size_t i = 0; i < edges.size(); ++i) {
    out += "    {\"from\": " + std::to_string(edges[i].first) +
           ", \"to\": " + std::to_string(edges[i].second) + ", \"r_ohm\": " +
           std::to_string(r) + ", \"x_ohm\": " + std::to_string(x) +
           ", \"ampacity_a\": " + std::to_string(amp) + "}";
    out += i + 1 < edges.size() ? ",\n" : "\n";
  }
  out += "  ]\n}\n";
  return out;
}

std::string scenario_json(const BundleOptions& opts) {
  std::string out = R"({
  "schema": "rvc-scenario/1",
  "seed": )" + std::to_string(opts.seed) + R"(,
  "network_file": "network.json",
  "plants": [
    {
      "name": "PV1", "bus": 11, "s_max_va": 13000.0, "pf_min": 1.0,
      "reactive_capable": false,
      "pv_model": {"panel_area_m2": 67.0, "efficiency": 0.2,
                   "temp_coeff_per_c": -0.004, "dc_ac_derate": 0.97}
    },
    {
      "name": "PV2", "bus": 9, "s_max_va": 16000.0, "pf_min": 0.9,
      "reactive_capable": true,
      "pv_model": {"panel_area_m2": 82.5, "efficiency": 0.2,
                   "temp_coeff_per_c": -0.004, "dc_ac_derate": 0.97}
    }
  ],
  "profiles": {
    "uncontrollable_file": "uncontrollable.csv",
    "slack_file": "slack.csv",
    "weather_file": "weather.csv"
  },
  "bootstrap": {
    "uncontrollable_file": "boot_uncontrollable.csv",
    "slack_file": "boot_slack.csv",
    "weather_file": "boot_weather.csv",
    "dither_w": 250.0
  },
  "noise": {"enabled": true, "voltage_class_pct": 0.2, "power_class_pct": 0.5},
  "estimator": {"mode": "sf", "lambda_reg": 1e-06, "mu": 0.98,
                "tau_min": 0.01, "tau_max": 20000.0, "alpha": 0.99,
                "cov_cap": 1e9},
  "control": {"v_min": 0.96, "v_max": 1.04, "voltage_margin": 0.0035,
              "xi": -1, "polygon_segments": 16, "formulation": "split"},
  "timing": {"sample_period_s": 1, "window_samples": 300,
             "control_period_s": 30, "duration_s": )" +
                    std::to_string(opts.duration_s) + R"(,
             "compute_budget_s": 30},
  "telemetry": {"enabled": false, "host": "127.0.0.1", "port": 0,
                "sensors": [1, 3, 5, 7, 9, 11, 13], "window_ms": 100},
  "report": {"nodes": [9, 11],
             "pairs": [[9, 3], [9, 9], [11, 3], [11, 11]]}
}
)";
  return out;
}

}  // namespace

std::string write_bundle(const BundleOptions& opts) {
  namespace fs = std::filesystem;
  if (opts.dir.empty()) throw ConfigError("bundle.dir", "output directory required");
  fs::create_directories(opts.dir);
  auto path = [&](const std::string& n) { return (fs::path(opts.dir) / n).string(); };

  {
    std::ofstream net(path("network.json"));
    net << network_json();
  }

  GaussianSampler rng(opts.seed ^ 0x9e3779b97f4a7c15ull);
  const long n = opts.duration_s;

  // ---- weather: clear-sky day ----
  {
    profiles::WeatherProfile w;
    const double rise = hours(5.5), set = hours(20.0);
    for (long t = 0; t < n; ++t) {
      double ghi = 0.0;
      if (t > rise && t < set && opts.ghi_peak_w_m2 > 0.0) {
        const double s = std::sin(kPi * (t - rise) / (set - rise));
        ghi = opts.ghi_peak_w_m2 * std::pow(std::max(0.0, s), 1.15);
        ghi *= 1.0 - 0.015 * std::sin(2.0 * kPi * t / hours(1.7));
      }
      const double temp =
          16.0 + 10.0 * std::max(0.0, std::sin(kPi * (t - hours(7.0)) / hours(15.0)));
      w.t.push_back(static_cast<double>(t));
      w.ghi_w_m2.push_back(std::max(0.0, ghi));
      w.temp_c.push_back(temp);
    }
    profiles::write_weather(path("weather.csv"), w);
  }

  // ---- slack voltage: upstream grid with tap steps at 12:00 and 15:00 ----
  {
    profiles::SlackProfile s;
    const std::vector<std::pair<double, double>> shape = {
        {hours(0), 1.012},  {hours(6), 1.013},  {hours(9), 1.016},
        {hours(11), 1.026}, {hours(12), 1.026}, {hours(12) + 1, 1.018},
        {hours(15), 1.026}, {hours(15) + 1, 1.018}, {hours(17), 1.022},
        {hours(20), 1.014}, {hours(24), 1.010}};
    Jitter j(rng, 2e-5, 600.0, 0.0);
    for (long t = 0; t < n; ++t) {
      double v = opts.flat_slack ? 1.0 : piecewise(shape, static_cast<double>(t));
      if (!opts.flat_slack) v += j.step();
      s.t.push_back(static_cast<double>(t));
      s.v_pu.push_back(v);
    }
    profiles::write_slack(path("slack.csv"), s);
  }

  // ---- uncontrollable prosumers at B03 (L1), B05 (battery), B14 (L2) ----
  {
    profiles::UncontrollableProfile u;
    u.bus_ids = {3, 5, 14};
    u.p_w.assign(3, {});
    u.q_var.assign(3, {});
    Jitter l1p(rng, 25.0, 300.0, 40.0), l1q(rng, 10.0, 300.0, 20.0);
    Jitter bp(rng, 40.0, 240.0, 60.0), bq(rng, 15.0, 240.0, 25.0);
    Jitter l2p(rng, 30.0, 300.0, 50.0), l2q(rng, 12.0, 300.0, 22.0);

    const std::vector<std::pair<double, double>> l1_shape = {
        {hours(0), -800},   {hours(6), -700},   {hours(7.5), -1700},
        {hours(9), -1100},  {hours(17), -1000}, {hours(19), -2200},
        {hours(22), -1400}, {hours(24), -800}};
    const std::vector<std::pair<double, double>> l2_shape = {
        {hours(0), -600},  {hours(8), -700},  {hours(9), -2400},
        {hours(18), -2200}, {hours(19), -900}, {hours(24), -600}};

    for (long t = 0; t < n; ++t) {
      const double td = static_cast<double>(t);
      double p1 = piecewise(l1_shape, td);
      double p2 = piecewise(l2_shape, td);
      double pb = 0.0, qb = 0.0;
      if (td >= hours(10) && td < hours(14)) pb = -2500.0;       // charging block
      else if (td >= hours(18) && td < hours(21)) pb = 2000.0;   // discharge block
      if (td >= hours(14) && td < hours(15)) qb = -2000.0;       // inductive absorption

      double q1 = 0.25 * p1;
      double q2 = 0.30 * p2;
      if (opts.flat_loads) {
        p1 = -1000.0; q1 = -250.0; p2 = -800.0; q2 = -240.0; pb = 0.0; qb = 0.0;
      } else {
        p1 += l1p.step();
        q1 += l1q.step();
        pb += bp.step();
        qb += bq.step();
        p2 += l2p.step();
        q2 += l2q.step();
      }
      u.t.push_back(td);
      u.p_w[0].push_back(p1);
      u.q_var[0].push_back(q1);
      u.p_w[1].push_back(pb);
      u.q_var[1].push_back(qb);
      u.p_w[2].push_back(p2);
      u.q_var[2].push_back(q2);
    }
    profiles::write_uncontrollable(path("uncontrollable.csv"), u);
  }

  // ---- bootstrap segment: prior-day midday, well excited ----
  {
    const long bn = 360;
    profiles::WeatherProfile w;
    Jitter gj(rng, 2.0, 120.0, 6.0);
    for (long t = 0; t < bn; ++t) {
      const double base = opts.ghi_peak_w_m2 > 0.0 ? 0.86 * opts.ghi_peak_w_m2 : 0.0;
      w.t.push_back(static_cast<double>(t));
      w.ghi_w_m2.push_back(std::max(0.0, base + (base > 0.0 ? gj.step() : 0.0)));
      w.temp_c.push_back(24.0);
    }
    profiles::write_weather(path("boot_weather.csv"), w);

    profiles::SlackProfile s;
    Jitter sj(rng, 2e-5, 600.0, 0.0);
    for (long t = 0; t < bn; ++t) {
      s.t.push_back(static_cast<double>(t));
      s.v_pu.push_back(opts.flat_slack ? 1.0 : 1.015 + sj.step());
    }
    profiles::write_slack(path("boot_slack.csv"), s);

    profiles::UncontrollableProfile u;
    u.bus_ids = {3, 5, 14};
    u.p_w.assign(3, {});
    u.q_var.assign(3, {});
    Jitter j1(rng, 25.0, 300.0, 40.0), j2(rng, 40.0, 240.0, 60.0), j3(rng, 30.0, 300.0, 50.0);
    Jitter jq1(rng, 10.0, 300.0, 20.0), jq2(rng, 15.0, 240.0, 25.0), jq3(rng, 12.0, 300.0, 22.0);
    for (long t = 0; t < bn; ++t) {
      u.t.push_back(static_cast<double>(t));
      const double f = opts.flat_loads ? 0.0 : 1.0;
      u.p_w[0].push_back(-1100.0 + f * j1.step());
      u.q_var[0].push_back(-275.0 + f * jq1.step());
      u.p_w[1].push_back(-2500.0 * (opts.flat_loads ? 0.0 : 1.0) + f * j2.step());
      u.q_var[1].push_back(f * jq2.step());
      u.p_w[2].push_back(-2300.0 + f * j3.step());
      u.q_var[2].push_back(-690.0 + f * jq3.step());
    }
    profiles::write_uncontrollable(path("boot_uncontrollable.csv"), u);
  }

  const std::string spath = path("scenario.json");
  {
    std::ofstream sc(spath);
    sc << scenario_json(opts);
  }
  return spath;
}

}  // namespace rvc::gen
