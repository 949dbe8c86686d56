#include <iostream>

#include "u2f/cli.hpp"

int main(int argc, char** argv) { return u2f::dispatch(argc, argv, std::cin, std::cout, std::cerr); }
