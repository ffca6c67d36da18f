#include "rvc/forecast.hpp"

#include <algorithm>
#include <string>

#include "rvc/errors.hpp"

namespace rvc::forecast {

void PvModel::validate() const {
  if (panel_area_m2 <= 0.0) throw ConfigError("pv_model.panel_area_m2", "must be > 0");
  if (!(efficiency > 0.0) || efficiency >= 1.0)
    throw ConfigError("pv_model.efficiency", "must be in (0,1)");
  if (!(dc_ac_derate > 0.0) || dc_ac_derate > 1.0)
    throw ConfigError("pv_model.dc_ac_derate", "must be in (0,1]");
}

double persistence_forecast(double latest_value, double latest_t, double now_t,
                            double sample_period) {
  const double age = now_t - latest_t;
  if (age < 0.0 || age > 2.0 * sample_period)
    throw StaleData("persistence_forecast: sample age " + std::to_string(age) +
                    " s exceeds two sample periods");
  return latest_value;
}

double mpp_from_weather(const PvModel& model, const WeatherSample& w, double s_max_w) {
  model.validate();
  if (w.ghi_w_m2 < 0.0) throw ConfigError("weather.ghi", "must be >= 0");
  const double cell_temp = w.air_temp_c + model.cell_temp_gain * w.ghi_w_m2;
  const double p = w.ghi_w_m2 * model.panel_area_m2 * model.efficiency *
                   (1.0 + model.temp_coeff_per_c * (cell_temp - 25.0)) *
                   model.dc_ac_derate;
  return std::clamp(p, 0.0, s_max_w);
}

}  // namespace rvc::forecast
