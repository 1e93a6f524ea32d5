#include "cli.hpp"

int main(int argc, char** argv) { return skipfree::cli::run(argc, argv); }
