#include <iostream>

#include "signpred/experiment.hpp"

int main(int argc, char** argv) {
  return signpred::run_cli(argc, argv, std::cout, std::cerr);
}
