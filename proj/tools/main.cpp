#include <iostream>
#include <string>
#include <vector>

#include "wow/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return wow::run_cli(args, std::cout, std::cerr);
}
