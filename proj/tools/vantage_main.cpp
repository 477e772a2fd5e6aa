#include <iostream>
#include <string>
#include <vector>

#include "vantage/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return vantage::cli::run(args, std::cout, std::cerr);
}
