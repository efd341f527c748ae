#include <iostream>

#include "maser/cli.hpp"

int main(int argc, char** argv) { return maser::run_cli(argc, argv, std::cout, std::cerr); }
