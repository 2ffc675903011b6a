#include <iostream>

#include "rhpsvm_cli.hpp"

int main(int argc, char** argv) { return rhpsvm::cli::run(argc, argv, std::cout, std::cerr); }
