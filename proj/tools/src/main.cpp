#include <iostream>

#include "pfmot/cli.hpp"

int main(int argc, char** argv) { return pfmot::cli::run(argc, argv, std::cout, std::cerr); }
