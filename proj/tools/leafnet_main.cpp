#include "leafnet/cli.hpp"

int main(int argc, char** argv) { return leafnet::cli::run(argc, argv); }
