#include <iostream>

#include "ccdf/cli.hpp"

int main(int argc, char** argv) { return ccdf::cli::run(argc, argv, std::cout, std::cerr); }
