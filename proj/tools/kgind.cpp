#include <iostream>
#include <string>
#include <vector>

#include "kgind/cli.hpp"

int main(int argc, char** argv) {
  return kgind::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout);
}
