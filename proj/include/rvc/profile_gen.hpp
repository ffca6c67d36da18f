#pragma once

#include <cstdint>
#include <string>

namespace rvc::gen {

/// Bundled scenario: a 14-bus CIGRE-style LV feeder (radial trunk B01..B11
/// with spurs at B03, B05, B07), two rooftop PV plants (PV1 at B11,
/// active-power only; PV2 at B09, full P-Q), uncontrollable prosumers at
/// B03/B05/B14, a clear-sky irradiance day and a slack-voltage day shaped by
/// upstream tap action. All profiles are generated deterministically from
/// the seed.
struct BundleOptions {
  std::string dir;
  std::uint64_t seed = 20220718;
  long duration_s = 86400;
  double ghi_peak_w_m2 = 950.0;  // 0 disables PV entirely
  bool flat_loads = false;       // constant loads, no jitter
  bool flat_slack = false;       // constant 1.0 slack
};

/// Writes network JSON, scenario JSON and all profile CSVs into dir.
/// Returns the scenario file path.
std::string write_bundle(const BundleOptions& opts);

}  // namespace rvc::gen
