#include "cli.hpp"

int main(int argc, char** argv) { return subperf::cli::run_cli(argc, argv); }
