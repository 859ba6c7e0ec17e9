#include "uclab/cli.hpp"

int main(int argc, char** argv) { return uclab::cli::run(argc, argv); }
