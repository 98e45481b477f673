#include <iostream>
#include <string>
#include <vector>

#include "segpoison/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return segpoison::cli::run(args, std::cout, std::cerr);
}
