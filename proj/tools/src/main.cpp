#include <iostream>

#include "vercore/cli.hpp"

int main(int argc, char** argv) {
  return vercore::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
