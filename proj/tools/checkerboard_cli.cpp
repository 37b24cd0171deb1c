#include <iostream>

#include "checkerboard/commands.hpp"

int main(int argc, char** argv) {
  return checkerboard::cli::run(argc, argv, std::cout, std::cerr);
}
