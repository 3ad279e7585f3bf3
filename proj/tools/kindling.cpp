#include <iostream>
#include <string>
#include <vector>

#include "kindling/harness/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return kindling::harness::run_cli(args, {std::cin, std::cout, std::cerr});
}
