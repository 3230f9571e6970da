#include <iostream>

#include "lexicost/cli.hpp"

int main(int argc, char** argv) { return lexicost::run_cli(argc, argv, std::cout, std::cerr); }
