#include <iostream>

#include "kcs/cli.h"

int main(int argc, char** argv) {
  return kcs::RunCli(argc, argv, std::cout, std::cerr);
}
