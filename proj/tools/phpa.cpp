#include "gphpa/cli.hpp"

int main(int argc, char** argv) { return gphpa::cli::run(argc, argv); }
