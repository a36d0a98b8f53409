#include <iostream>

#include "seqcoord/cli.hpp"

int main(int argc, char** argv) { return seqcoord::run_cli(argc, argv, std::cout, std::cerr); }
