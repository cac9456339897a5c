#include <iostream>

#include "plw/cli.hpp"

int main(int argc, char** argv) { return plw::run_cli(argc, argv, std::cout, std::cerr); }
