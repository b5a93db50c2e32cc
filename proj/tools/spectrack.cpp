#include <iostream>

#include "spectrack/cli.hpp"

int main(int argc, char** argv) { return spectrack::cli::run(argc, argv, std::cout, std::cerr); }
