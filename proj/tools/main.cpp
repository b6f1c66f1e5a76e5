#include "bilayer/cli.hpp"

int main(int argc, char** argv) { return bilayer::cli::main_entry(argc, argv); }
