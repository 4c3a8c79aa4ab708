#include <iostream>

#include "dispbias/cli.hpp"

int main(int argc, char** argv) { return dispbias::run_cli(argc, argv, std::cout, std::cerr); }
