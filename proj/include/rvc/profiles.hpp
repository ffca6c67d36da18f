#pragma once

#include <map>
#include <string>
#include <vector>

namespace rvc::profiles {

/// Per-second uncontrollable injections; buses absent from the file inject
/// nothing. Columns: t, then p_<bus>/q_<bus> pairs in watts/vars.
struct UncontrollableProfile {
  std::vector<int> bus_ids;
  std::vector<double> t;                    // seconds from profile start
  std::vector<std::vector<double>> p_w;     // [bus][step]
  std::vector<std::vector<double>> q_var;   // [bus][step]

  std::size_t steps() const { return t.size(); }
};

/// Per-second slack voltage magnitude. Columns: t, v_pu.
struct SlackProfile {
  std::vector<double> t;
  std::vector<double> v_pu;
  std::size_t steps() const { return t.size(); }
};

/// Per-second GHI and air temperature. Columns: t, ghi, temp.
struct WeatherProfile {
  std::vector<double> t;
  std::vector<double> ghi_w_m2;
  std::vector<double> temp_c;
  std::size_t steps() const { return t.size(); }
};

UncontrollableProfile read_uncontrollable(const std::string& path);
SlackProfile read_slack(const std::string& path);
WeatherProfile read_weather(const std::string& path);

void write_uncontrollable(const std::string& path, const UncontrollableProfile& p);
void write_slack(const std::string& path, const SlackProfile& p);
void write_weather(const std::string& path, const WeatherProfile& p);

/// Throws ProfileGap unless timestamps start at 0 and advance by exactly
/// `period` for at least `required_steps` rows.
void check_contiguous(const std::vector<double>& t, double period,
                      std::size_t required_steps, const std::string& what);

}  // namespace rvc::profiles
