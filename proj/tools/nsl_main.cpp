#include <iostream>

#include "nsl/cli.hpp"

int main(int argc, char** argv) { return nsl::run(argc, argv, std::cout, std::cerr); }
