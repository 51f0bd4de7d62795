#include <iostream>

#include "scoregeo/commands.hpp"

int main(int argc, char** argv) { return scoregeo::run_cli(argc, argv, std::cout, std::cerr); }
