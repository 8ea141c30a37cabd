#include "rvde/cli.hpp"

int main(int argc, char** argv) { return rvde::cli::cli_main(argc, argv); }
