#include <vector>
#include <string>

#include "rvc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return rvc::cli::run_cli(args);
}
