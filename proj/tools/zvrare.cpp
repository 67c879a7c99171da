#include <iostream>

#include "zvrare/cli.hpp"

int main(int argc, char** argv) {
  return zvrare::cli::main(argc, argv, std::cout, std::cerr);
}
