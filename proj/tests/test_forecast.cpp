#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rvc/errors.hpp"
#include "rvc/forecast.hpp"

using namespace rvc;
using namespace rvc::forecast;

namespace {
PvModel reference_model() {
  PvModel m;
  m.panel_area_m2 = 65.0;
  m.efficiency = 0.2;
  m.temp_coeff_per_c = -0.004;
  m.dc_ac_derate = 1.0;
  return m;
}
}  // namespace

TEST_CASE("persistence returns the last observation") {
  CHECK(persistence_forecast(800.0, 10.0, 11.0, 1.0) == 800.0);
  CHECK(persistence_forecast(-3200.0, 10.0, 12.0, 1.0) == -3200.0);
}

TEST_CASE("stale samples are rejected") {
  CHECK_THROWS_AS(persistence_forecast(800.0, 10.0, 12.5, 1.0), StaleData);
  CHECK_THROWS_AS(persistence_forecast(800.0, 13.0, 12.0, 1.0), StaleData);
}

TEST_CASE("mpp at night is zero") {
  WeatherSample w;
  w.ghi_w_m2 = 0.0;
  w.air_temp_c = 15.0;
  CHECK(mpp_from_weather(reference_model(), w, 20e3) == 0.0);
}

TEST_CASE("mpp arithmetic identity at reference temperature") {
  // keep the cell at 25 degC so the temperature factor is exactly 1
  PvModel m = reference_model();
  WeatherSample w;
  w.ghi_w_m2 = 1000.0;
  w.air_temp_c = 25.0 - m.cell_temp_gain * w.ghi_w_m2;
  const double expect = 1000.0 * 65.0 * 0.2;  // 13 kW
  CHECK(mpp_from_weather(m, w, 20e3) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("mpp never exceeds the converter rating") {
  PvModel m = reference_model();
  for (double ghi : {200.0, 600.0, 1000.0, 1400.0}) {
    WeatherSample w;
    w.ghi_w_m2 = ghi;
    w.air_temp_c = 10.0;
    CHECK(mpp_from_weather(m, w, 9e3) <= 9e3);
  }
}

TEST_CASE("mpp is monotone in irradiance at fixed temperature") {
  PvModel m = reference_model();
  double prev = -1.0;
  for (double ghi = 0.0; ghi <= 1200.0; ghi += 50.0) {
    WeatherSample w;
    w.ghi_w_m2 = ghi;
    w.air_temp_c = 20.0;
    const double p = mpp_from_weather(m, w, 50e3);
    CHECK(p >= prev);
    prev = p;
  }
}

TEST_CASE("model validation") {
  PvModel m = reference_model();
  m.efficiency = 1.5;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = reference_model();
  m.dc_ac_derate = 0.0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
}
