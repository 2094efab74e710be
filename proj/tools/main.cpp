#include <iostream>
#include <string>
#include <vector>

#include "clustem/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return clustem::cli::run(args, std::cout, std::cerr);
}
