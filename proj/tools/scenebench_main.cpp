#include "scenebench/cli.hpp"

int main(int argc, char** argv) { return scenebench::cli::run_cli(argc, argv); }
