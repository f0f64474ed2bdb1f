#include <iostream>

#include "difftherm/cli.hpp"

int main(int argc, char** argv) { return difftherm::cli::run(argc, argv, std::cout, std::cerr); }
