#include <iostream>

#include "elue/harness/cli.hpp"

int main(int argc, char** argv) { return elue::harness::run_cli(argc, argv, std::cout, std::cerr); }
