#include <iostream>

#include "ruinwalk/cli.hpp"

int main(int argc, char** argv) { return ruinwalk::cli::run(argc, argv, std::cout, std::cerr); }
