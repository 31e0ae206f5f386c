#include <iostream>
#include <string>
#include <vector>

#include "scribblefill_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return scribblefill::cli::run(args, std::cout, std::cerr);
}
