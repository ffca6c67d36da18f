#include "rvc/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rvc/errors.hpp"

namespace rvc::scenario {

using json = nlohmann::json;

namespace {

ProfileFiles parse_profile_files(const json& j, const std::string& where) {
  ProfileFiles f;
  try {
    f.uncontrollable_file = j.at("uncontrollable_file").get<std::string>();
    f.slack_file = j.at("slack_file").get<std::string>();
    f.weather_file = j.at("weather_file").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(where, e.what());
  }
  return f;
}

}  // namespace

std::string ScenarioConfig::resolve(const std::string& relative) const {
  std::filesystem::path p(relative);
  if (p.is_absolute() || base_dir.empty()) return relative;
  return (std::filesystem::path(base_dir) / p).string();
}

void ScenarioConfig::validate() const {
  if (plants.empty()) throw ConfigError("plants", "need at least one PV plant");
  for (const auto& pl : plants) {
    pl.config.validate();
    pl.pv_model.validate();
  }
  if (noise.voltage_class_pct < 0.0 || noise.power_class_pct < 0.0)
    throw ConfigError("noise", "transducer classes must be >= 0");
  if (!(estimator.mu > 0.0) || estimator.mu > 1.0)
    throw ConfigError("estimator.mu", "must be in (0,1]");
  if (estimator.lambda_reg < 0.0) throw ConfigError("estimator.lambda_reg", "must be >= 0");
  if (!(estimator.tau_min > 0.0 && estimator.tau_min < estimator.tau_max))
    throw ConfigError("estimator.tau", "need 0 < tau_min < tau_max");
  if (!(estimator.alpha > 0.0 && estimator.alpha < 1.0))
    throw ConfigError("estimator.alpha", "must be in (0,1)");
  if (!(control.v_min < control.v_max))
    throw ConfigError("control.v_bounds", "need v_min < v_max");
  if (control.voltage_margin < 0.0 ||
      2.0 * control.voltage_margin >= control.v_max - control.v_min)
    throw ConfigError("control.voltage_margin", "margin swallows the voltage band");
  if (control.xi >= 0.0 && control.xi > static_cast<double>(plants.size()))
    throw ConfigError("control.xi", "budget cannot exceed the plant count");
  if (timing.sample_period_s <= 0.0) throw ConfigError("timing.sample_period_s", "must be > 0");
  if (timing.window_samples < 2) throw ConfigError("timing.window_samples", "must be >= 2");
  if (timing.control_period_s < 1) throw ConfigError("timing.control_period_s", "must be >= 1");
  const long per = static_cast<long>(timing.control_period_s / timing.sample_period_s);
  if (std::abs(per * timing.sample_period_s - timing.control_period_s) > 1e-9)
    throw ConfigError("timing", "control period must be a multiple of the sample period");
  if (timing.duration_s < timing.control_period_s)
    throw ConfigError("timing.duration_s", "shorter than one control cycle");
  if (timing.compute_budget_s <= 0.0)
    throw ConfigError("timing.compute_budget_s", "must be > 0");
}

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text,
                                              const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("scenario", std::string("json parse failed: ") + e.what());
  }
  ScenarioConfig c;
  c.base_dir = base_dir;
  try {
    if (j.value("schema", "") != "rvc-scenario/1")
      throw ConfigError("scenario.schema", "expected rvc-scenario/1");
    c.network_file = j.at("network_file").get<std::string>();
    c.seed = j.value("seed", 1ull);

    for (const auto& jp : j.at("plants")) {
      PlantSpec pl;
      pl.name = jp.value("name", "pv");
      pl.config.bus_id = jp.at("bus").get<int>();
      pl.config.s_max_va = jp.at("s_max_va").get<double>();
      pl.config.pf_min = jp.value("pf_min", 1.0);
      pl.config.reactive_capable = jp.value("reactive_capable", false);
      const auto& jm = jp.at("pv_model");
      pl.pv_model.panel_area_m2 = jm.at("panel_area_m2").get<double>();
      pl.pv_model.efficiency = jm.at("efficiency").get<double>();
      pl.pv_model.temp_coeff_per_c = jm.value("temp_coeff_per_c", -0.004);
      pl.pv_model.dc_ac_derate = jm.value("dc_ac_derate", 1.0);
      pl.pv_model.cell_temp_gain = jm.value("cell_temp_gain", 0.03);
      c.plants.push_back(pl);
    }

    c.profiles = parse_profile_files(j.at("profiles"), "profiles");
    if (j.contains("bootstrap")) {
      c.bootstrap.files = parse_profile_files(j.at("bootstrap"), "bootstrap");
      c.bootstrap.dither_w = j.at("bootstrap").value("dither_w", 0.0);
    } else {
      c.bootstrap.files = c.profiles;  // fall back to the day's own profiles
    }

    if (j.contains("noise")) {
      const auto& jn = j.at("noise");
      c.noise.enabled = jn.value("enabled", true);
      c.noise.voltage_class_pct = jn.value("voltage_class_pct", 0.2);
      c.noise.power_class_pct = jn.value("power_class_pct", 0.5);
    }

    if (j.contains("estimator")) {
      const auto& je = j.at("estimator");
      const std::string mode = je.value("mode", "sf");
      if (mode == "sf")
        c.estimator.mode = est::RlsMode::SelectiveForgetting;
      else if (mode == "f")
        c.estimator.mode = est::RlsMode::PlainForgetting;
      else
        throw ConfigError("estimator.mode", "expected 'sf' or 'f'");
      c.estimator.lambda_reg = je.value("lambda_reg", 1e-6);
      c.estimator.mu = je.value("mu", 0.98);
      c.estimator.tau_min = je.value("tau_min", 0.01);
      c.estimator.tau_max = je.value("tau_max", 100.0);
      const std::string rule = je.value("tau_rule", "anchored");
      if (rule == "anchored")
        c.estimator.tau_rule = est::SfTauRule::MeasurementAnchored;
      else if (rule == "printed")
        c.estimator.tau_rule = est::SfTauRule::Printed;
      else
        throw ConfigError("estimator.tau_rule", "expected 'anchored' or 'printed'");
      c.estimator.alpha = je.value("alpha", 0.99);
      c.estimator.cov_cap = je.value("cov_cap", 1e9);
    }

    if (j.contains("control")) {
      const auto& jc = j.at("control");
      c.control.v_min = jc.value("v_min", 0.96);
      c.control.v_max = jc.value("v_max", 1.04);
      c.control.voltage_margin = jc.value("voltage_margin", 0.0);
      c.control.xi = jc.value("xi", -1.0);
      c.control.polygon_segments = jc.value("polygon_segments", 16);
      const std::string form = jc.value("formulation", "split");
      if (form == "split")
        c.control.formulation = ctrl::RobustFormulation::SplitBudget;
      else if (form == "printed")
        c.control.formulation = ctrl::RobustFormulation::AsPrinted;
      else
        throw ConfigError("control.formulation", "expected 'split' or 'printed'");
    }

    if (j.contains("timing")) {
      const auto& jt = j.at("timing");
      c.timing.sample_period_s = jt.value("sample_period_s", 1.0);
      c.timing.window_samples = jt.value("window_samples", 300);
      c.timing.control_period_s = jt.value("control_period_s", 30);
      c.timing.duration_s = jt.value("duration_s", 86400L);
      c.timing.compute_budget_s = jt.value("compute_budget_s", 30.0);
    }

    if (j.contains("telemetry")) {
      const auto& jt = j.at("telemetry");
      c.telemetry.enabled = jt.value("enabled", false);
      c.telemetry.host = jt.value("host", std::string("127.0.0.1"));
      c.telemetry.port = jt.value("port", 0);
      if (jt.contains("sensors"))
        for (const auto& s : jt.at("sensors")) c.telemetry.sensor_buses.push_back(s.get<int>());
      c.telemetry.window_ms = jt.value("window_ms", 100);
    }

    if (j.contains("report")) {
      const auto& jr = j.at("report");
      if (jr.contains("nodes"))
        for (const auto& n : jr.at("nodes")) c.report.nodes.push_back(n.get<int>());
      if (jr.contains("pairs"))
        for (const auto& p : jr.at("pairs"))
          c.report.pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
    }
  } catch (const json::exception& e) {
    throw ConfigError("scenario", std::string("missing/invalid field: ") + e.what());
  }
  c.validate();
  return c;
}

ScenarioConfig ScenarioConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str(), std::filesystem::path(path).parent_path().string());
}

}  // namespace rvc::scenario
