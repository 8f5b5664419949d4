#include <iostream>
#include <string>
#include <vector>

#include "hgrf/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return hgrf::run_cli(args, std::cout, std::cerr);
}
