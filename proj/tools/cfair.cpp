#include "cfair/cli.hpp"

int main(int argc, char** argv) { return cfair::run_cli(argc, argv); }
