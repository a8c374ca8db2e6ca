#include <iostream>
#include <string>
#include <vector>

#include "demandcast/cli.hpp"

int main(int argc, char** argv) {
  return demandcast::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
