#include "bqc/cli.hpp"

int main(int argc, char** argv) { return bqc::cli::main(argc, argv); }
