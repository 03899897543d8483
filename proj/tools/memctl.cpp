#include <iostream>

#include "scenemem/memctl/cli.hpp"

int main(int argc, char** argv) { return scenemem::memctl::run_cli(argc, argv, std::cout, std::cerr); }
