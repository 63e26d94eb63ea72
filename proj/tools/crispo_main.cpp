#include "crispo/cli.hpp"

int main(int argc, char** argv) { return crispo::run_cli(argc, argv); }
