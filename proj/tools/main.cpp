#include <iostream>
#include <string>
#include <vector>

#include "torus_waves/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return torus_waves::run_cli(args, std::cout, std::cerr);
}
