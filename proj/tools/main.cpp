#include <iostream>

#include "rtip/cli.hpp"

int main(int argc, char** argv) { return rtip::run_cli(argc, argv, std::cout, std::cerr); }
