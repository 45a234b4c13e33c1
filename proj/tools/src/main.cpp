#include <iostream>
#include <string>
#include <vector>

#include "safe_lsvi_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return safe_lsvi::cli::cli_run(args, std::cout, std::cerr);
}
