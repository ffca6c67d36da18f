#pragma once

#include <string>
#include <vector>

namespace rvc::cli {

/// Entry point shared by the rvcsim binary and in-process tests.
/// Subcommands: run, metrics, verify, gen. Returns the process exit code.
int run_cli(const std::vector<std::string>& args);

}  // namespace rvc::cli
