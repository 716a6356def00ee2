#include <iostream>
#include <string>
#include <vector>

#include "gral/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return gral::cli::run(args, std::cout, std::cerr);
}
