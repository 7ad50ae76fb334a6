#include "indid/cli.hpp"

int main(int argc, char** argv) { return indid::run_cli(argc, argv); }
