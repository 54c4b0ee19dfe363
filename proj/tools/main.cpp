#include "cli.hpp"

int main(int argc, char** argv) { return fastglz::cli::run_command(argc, argv); }
