#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "rvc/grid.hpp"

namespace rvc::testing {

/// Radial chain feeder: bus 1 slack, buses 2..n in a line, uniform segments.
inline grid::NetworkModel make_chain(int n_buses, double r_ohm, double x_ohm,
                                     double s_base = 100e3, double v_base = 400.0) {
  grid::NetworkModel m;
  m.s_base_va = s_base;
  m.v_base_v = v_base;
  for (int i = 1; i <= n_buses; ++i)
    m.buses.push_back({i, i == 1 ? grid::BusType::Slack : grid::BusType::PQ,
                       v_base / 1000.0});
  for (int i = 1; i < n_buses; ++i)
    m.branches.push_back({i, i + 1, r_ohm, x_ohm, 150.0});
  m.validate();
  return m;
}

/// Exact |v2| of the 2-bus case: slack 1.0 pu, series z = r + jx (pu),
/// injection p + jq (pu) at bus 2. From v e^{jt} - v^2 = -(p+jq)(r-jx):
/// u^2 - u (1 + 2(pr+qx)) + (pr+qx)^2 + (px-qr)^2 = 0 with u = v^2.
inline double two_bus_voltage(double r, double x, double p, double q) {
  const double a = p * r + q * x;
  const double b = p * x - q * r;
  const double bq = 1.0 + 2.0 * a;
  const double disc = bq * bq - 4.0 * (a * a + b * b);
  const double u = 0.5 * (bq + std::sqrt(disc));
  return std::sqrt(u);
}

/// Unique scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() /
           ("rvc_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace rvc::testing
