#include "netlqr/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return netlqr::cli::run(argc, argv, std::cout, std::cerr); }
