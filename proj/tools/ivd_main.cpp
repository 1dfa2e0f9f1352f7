#include <iostream>
#include <string>
#include <vector>

#include "ivd/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ivd::run_cli(args, std::cout, std::cerr);
}
