#include <iostream>

#include "nlim/cli.hpp"

int main(int argc, char** argv) { return nlim::cli::run(argc, argv, std::cin, std::cout, std::cerr); }
