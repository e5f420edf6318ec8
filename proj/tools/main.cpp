#include <iostream>
#include <vector>

#include "streamtune/cli.hpp"

int main(int argc, char** argv) {
  return streamtune::run_cli(std::vector<std::string>(argv + 1, argv + argc),
                             std::cout, std::cerr);
}
