#include "collapse_lab_cli.hpp"

int main(int argc, char** argv) { return collapse_lab::cli::run_cli(argc, argv); }
