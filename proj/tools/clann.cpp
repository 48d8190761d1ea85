#include <iostream>
#include <string>
#include <vector>

#include "clann/cli.hpp"

int main(int argc, char** argv) {
  return clann::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
