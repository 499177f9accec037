#include <iostream>

#include "corpusgate/cli.hpp"

int main(int argc, char** argv) { return corpusgate::cli::run(argc, argv, std::cout, std::cerr); }
