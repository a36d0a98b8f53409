#include <iostream>

#include "seqcoord/acceptance.hpp"

int main(int argc, char** argv) { return seqcoord::run_acceptance(std::cout, argc > 1 ? argv[1] : ""); }
