#include <iostream>

#include "qhjlab/cli/app.hpp"

int main(int argc, char** argv) { return qhjlab::cli::run_cli(argc, argv, std::cout, std::cerr); }
