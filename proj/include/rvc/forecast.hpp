#pragma once

namespace rvc::forecast {

struct WeatherSample {
  double ghi_w_m2 = 0.0;
  double air_temp_c = 25.0;
  double timestamp_s = 0.0;
};

/// Irradiance-to-power map with linear temperature derating. Stands in for a
/// full electro-thermal converter model; parameters come from the scenario.
struct PvModel {
  double panel_area_m2 = 0.0;
  double efficiency = 0.0;          // at 25 degC cell temperature
  double temp_coeff_per_c = 0.0;    // usually negative
  double dc_ac_derate = 1.0;
  double cell_temp_gain = 0.03;     // degC per W/m^2 of GHI

  void validate() const;
};

/// Persistence: the forecast equals the last observed value. Throws
/// StaleData when the observation is older than two sample periods.
double persistence_forecast(double latest_value, double latest_t, double now_t,
                            double sample_period);

/// MPP in watts, clamped to [0, s_max_w].
double mpp_from_weather(const PvModel& model, const WeatherSample& w, double s_max_w);

}  // namespace rvc::forecast
