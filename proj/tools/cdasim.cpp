#include "cda/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return cda::run_cli(argc, argv, std::cout, std::cerr); }
