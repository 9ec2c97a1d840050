#include <iostream>

#include "pjx/cli.hpp"

int main(int argc, char** argv) { return pjx::cli::run(argc, argv, std::cout, std::cerr); }
