#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

namespace rvc::manifest {

inline constexpr const char* kCodeVersion = "rvcsim 0.1.0";

std::uint64_t fnv1a64(std::span<const std::uint8_t> data);
std::uint64_t fnv1a64_file(const std::string& path);
std::string hash_hex(std::uint64_t h);

struct RunManifest {
  std::string scenario_path;
  std::string scenario_hash;  // "fnv1a64:<hex>" over the config file bytes
  std::uint64_t seed = 0;
  std::string code_version = kCodeVersion;
  std::string mode;  // "control" or "baseline"
  std::map<std::string, std::string> outputs;  // logical name -> file path
  long cycles = 0;
  double mean_cycle_ms = 0.0;
  double max_cycle_ms = 0.0;
  long deadline_breaches = 0;
  std::uint64_t telemetry_sent = 0;
  std::uint64_t telemetry_errors = 0;
  bool completed = false;

  /// Written atomically (temp file + rename).
  void write(const std::string& path) const;
  static RunManifest read(const std::string& path);
};

}  // namespace rvc::manifest
