#include "rigidlab/cli.hpp"

int main(int argc, char** argv) { return rigidlab::cli::main(argc, argv); }
