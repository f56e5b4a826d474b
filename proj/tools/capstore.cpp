#include <exception>
#include <iostream>

#include "capstore/cli.hpp"

int main(int argc, char** argv) {
  try {
    return capstore::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
