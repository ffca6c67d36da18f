#include "rvc/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "rvc/errors.hpp"

namespace rvc::manifest {

using json = nlohmann::json;

std::uint64_t fnv1a64(std::span<const std::uint8_t> data) {
  std::uint64_t h = 14695981039346656037ull;
  for (std::uint8_t b : data) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot hash file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return fnv1a64(bytes);
}

std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void RunManifest::write(const std::string& path) const {
  json j;
  j["schema"] = "rvc-manifest/1";
  j["scenario_path"] = scenario_path;
  j["scenario_hash"] = scenario_hash;
  j["seed"] = seed;
  j["code_version"] = code_version;
  j["mode"] = mode;
  j["outputs"] = outputs;
  j["timing"] = {{"cycles", cycles},
                 {"mean_cycle_ms", mean_cycle_ms},
                 {"max_cycle_ms", max_cycle_ms},
                 {"deadline_breaches", deadline_breaches}};
  j["telemetry"] = {{"sent", telemetry_sent}, {"send_errors", telemetry_errors}};
  j["completed"] = completed;

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write manifest: " + tmp);
    out << j.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

RunManifest RunManifest::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  json j;
  in >> j;
  RunManifest m;
  m.scenario_path = j.value("scenario_path", "");
  m.scenario_hash = j.value("scenario_hash", "");
  m.seed = j.value("seed", 0ull);
  m.code_version = j.value("code_version", "");
  m.mode = j.value("mode", "");
  if (j.contains("outputs"))
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
  if (j.contains("timing")) {
    m.cycles = j["timing"].value("cycles", 0L);
    m.mean_cycle_ms = j["timing"].value("mean_cycle_ms", 0.0);
    m.max_cycle_ms = j["timing"].value("max_cycle_ms", 0.0);
    m.deadline_breaches = j["timing"].value("deadline_breaches", 0L);
  }
  if (j.contains("telemetry")) {
    m.telemetry_sent = j["telemetry"].value("sent", 0ull);
    m.telemetry_errors = j["telemetry"].value("send_errors", 0ull);
  }
  m.completed = j.value("completed", false);
  return m;
}

}  // namespace rvc::manifest
