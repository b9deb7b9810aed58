#include "flowdd/cli.hpp"

int main(int argc, char** argv) { return flowdd::cli::main_entry(argc, argv); }
