#include <iostream>

#include "bellscope/cli.hpp"

int main(int argc, char** argv) { return bellscope::run(argc, argv, std::cout, std::cerr); }
