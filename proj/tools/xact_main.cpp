#include "xact/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return xact::run_cli(argc, argv, std::cout, std::cerr); }
