#include <treadkit/cli.hpp>

#include <iostream>

int main(int argc, char** argv) { return treadkit::run_cli(argc, argv, std::cout, std::cerr); }
