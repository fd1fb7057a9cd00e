#include "caai/cli.hpp"

int main(int argc, char** argv) { return caai::run_cli(argc, argv); }
