#include <iostream>

#include "prescribe/cli.hpp"

int main(int argc, char** argv) {
  return prescribe::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
