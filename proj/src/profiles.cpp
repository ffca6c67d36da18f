#include "rvc/profiles.hpp"

#include <cmath>
#include <cstdlib>

#include "rvc/errors.hpp"
#include "rvc/logging.hpp"

namespace rvc::profiles {

using logio::CsvRow;
using logio::CsvTable;
using logio::CsvWriter;
using logio::read_csv;

void check_contiguous(const std::vector<double>& t, double period,
                      std::size_t required_steps, const std::string& what) {
  if (t.size() < required_steps)
    throw ProfileGap(what + ": has " + std::to_string(t.size()) + " rows, need " +
                     std::to_string(required_steps));
  if (!t.empty() && std::abs(t[0]) > 1e-9)
    throw ProfileGap(what + ": must start at t=0");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (std::abs(t[i] - t[i - 1] - period) > 1e-9)
      throw ProfileGap(what + ": gap at row " + std::to_string(i));
}

UncontrollableProfile read_uncontrollable(const std::string& path) {
  const CsvTable tab = read_csv(path);
  UncontrollableProfile p;
  if (tab.columns.empty() || tab.columns[0] != "t")
    throw ProfileGap("uncontrollable profile: first column must be t: " + path);
  std::vector<int> p_cols, q_cols;
  for (std::size_t c = 1; c < tab.columns.size(); ++c) {
    const auto& name = tab.columns[c];
    if (name.rfind("p_", 0) == 0) {
      p.bus_ids.push_back(std::atoi(name.c_str() + 2));
      p_cols.push_back(static_cast<int>(c));
    } else if (name.rfind("q_", 0) == 0) {
      q_cols.push_back(static_cast<int>(c));
    } else {
      throw ProfileGap("uncontrollable profile: unexpected column " + name);
    }
  }
  if (p_cols.size() != q_cols.size())
    throw ProfileGap("uncontrollable profile: p_/q_ columns must pair up");
  p.p_w.assign(p.bus_ids.size(), {});
  p.q_var.assign(p.bus_ids.size(), {});
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    p.t.push_back(tab.num(r, 0));
    for (std::size_t b = 0; b < p.bus_ids.size(); ++b) {
      p.p_w[b].push_back(tab.num(r, p_cols[b]));
      p.q_var[b].push_back(tab.num(r, q_cols[b]));
    }
  }
  return p;
}

SlackProfile read_slack(const std::string& path) {
  const CsvTable tab = read_csv(path);
  const int tc = tab.col("t"), vc = tab.col("v_pu");
  if (tc < 0 || vc < 0) throw ProfileGap("slack profile: need t,v_pu columns: " + path);
  SlackProfile p;
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    p.t.push_back(tab.num(r, tc));
    p.v_pu.push_back(tab.num(r, vc));
  }
  return p;
}

WeatherProfile read_weather(const std::string& path) {
  const CsvTable tab = read_csv(path);
  const int tc = tab.col("t"), gc = tab.col("ghi"), mc = tab.col("temp");
  if (tc < 0 || gc < 0 || mc < 0)
    throw ProfileGap("weather profile: need t,ghi,temp columns: " + path);
  WeatherProfile p;
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    p.t.push_back(tab.num(r, tc));
    p.ghi_w_m2.push_back(tab.num(r, gc));
    p.temp_c.push_back(tab.num(r, mc));
  }
  return p;
}

void write_uncontrollable(const std::string& path, const UncontrollableProfile& p) {
  std::vector<std::string> cols = {"t"};
  for (int b : p.bus_ids) {
    cols.push_back("p_" + std::to_string(b));
    cols.push_back("q_" + std::to_string(b));
  }
  CsvWriter w(path, "rvc-uncontrollable/1", cols);
  for (std::size_t r = 0; r < p.steps(); ++r) {
    CsvRow row;
    row.add(p.t[r], 10);
    for (std::size_t b = 0; b < p.bus_ids.size(); ++b) {
      row.add(p.p_w[b][r], 10);
      row.add(p.q_var[b][r], 10);
    }
    w.write(row);
  }
}

void write_slack(const std::string& path, const SlackProfile& p) {
  CsvWriter w(path, "rvc-slack/1", {"t", "v_pu"});
  for (std::size_t r = 0; r < p.steps(); ++r) {
    CsvRow row;
    row.add(p.t[r], 10);
    row.add(p.v_pu[r], 12);
    w.write(row);
  }
}

void write_weather(const std::string& path, const WeatherProfile& p) {
  CsvWriter w(path, "rvc-weather/1", {"t", "ghi", "temp"});
  for (std::size_t r = 0; r < p.steps(); ++r) {
    CsvRow row;
    row.add(p.t[r], 10);
    row.add(p.ghi_w_m2[r], 10);
    row.add(p.temp_c[r], 10);
    w.write(row);
  }
}

}  // namespace rvc::profiles
