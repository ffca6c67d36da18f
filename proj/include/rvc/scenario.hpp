#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rvc/control.hpp"
#include "rvc/estimation.hpp"
#include "rvc/forecast.hpp"
#include "rvc/grid.hpp"

namespace rvc::scenario {

struct PlantSpec {
  std::string name;
  ctrl::PvPlantConfig config;
  forecast::PvModel pv_model;
};

struct NoiseParams {
  bool enabled = true;
  double voltage_class_pct = 0.2;  // transducer class, read as a 3-sigma bound
  double power_class_pct = 0.5;

  double sigma_v() const { return voltage_class_pct / 100.0 / 3.0; }
  double sigma_power() const { return power_class_pct / 100.0 / 3.0; }
};

struct EstimatorParams {
  est::RlsMode mode = est::RlsMode::SelectiveForgetting;
  double lambda_reg = 1e-6;
  double mu = 0.98;
  double tau_min = 0.01;
  double tau_max = 100.0;
  est::SfTauRule tau_rule = est::SfTauRule::MeasurementAnchored;
  double alpha = 0.99;
  double cov_cap = 1e9;
};

struct ControlParams {
  double v_min = 0.96;
  double v_max = 1.04;
  double voltage_margin = 0.0;
  double xi = -1.0;  // negative = full budget (n_plants)
  int polygon_segments = 16;
  ctrl::RobustFormulation formulation = ctrl::RobustFormulation::SplitBudget;
};

struct TimingParams {
  double sample_period_s = 1.0;
  int window_samples = 300;
  int control_period_s = 30;
  long duration_s = 86400;
  double compute_budget_s = 30.0;
};

struct TelemetryParams {
  bool enabled = false;
  std::string host = "127.0.0.1";
  int port = 0;  // 0 = loopback self-test port chosen by the run
  std::vector<int> sensor_buses;
  int window_ms = 100;
};

struct ProfileFiles {
  std::string uncontrollable_file;
  std::string slack_file;
  std::string weather_file;
};

struct BootstrapParams {
  ProfileFiles files;       // excitation segment preceding t = 0
  double dither_w = 0.0;    // optional plant-injection dither during bootstrap
};

struct ReportParams {
  std::vector<int> nodes;                      // bus ids with logged estimates
  std::vector<std::pair<int, int>> pairs;      // (i, j) rows of the metrics table
};

struct ScenarioConfig {
  std::string network_file;
  std::vector<PlantSpec> plants;
  ProfileFiles profiles;
  BootstrapParams bootstrap;
  NoiseParams noise;
  EstimatorParams estimator;
  ControlParams control;
  TimingParams timing;
  TelemetryParams telemetry;
  ReportParams report;
  std::uint64_t seed = 1;

  std::string base_dir;  // directory of the scenario file; paths resolve against it

  std::string resolve(const std::string& relative) const;
  void validate() const;

  static ScenarioConfig from_json_file(const std::string& path);
  static ScenarioConfig from_json_text(const std::string& text,
                                       const std::string& base_dir);
};

}  // namespace rvc::scenario
