#include <iostream>

#include "navlab/cli/app.hpp"

int main(int argc, char** argv) {
  try {
    return navlab::cli_main(argc, argv);
  } catch (const navlab::UsageError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
