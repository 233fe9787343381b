#include "cli.hpp"

int main(int argc, char** argv) { return edr::cli::run(argc, argv); }
