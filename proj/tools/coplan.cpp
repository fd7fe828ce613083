#include <iostream>

#include "coplan/harness.hpp"

int main(int argc, char** argv) { return coplan::run_cli(argc, argv, std::cout, std::cerr); }
