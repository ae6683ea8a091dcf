#include "hetfx/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return hetfx::run_cli(argc, argv, std::cout, std::cerr); }
