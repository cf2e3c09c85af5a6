#include "coopt/cli.hpp"

int main(int argc, char** argv) { return coopt::cli::run(argc, argv); }
