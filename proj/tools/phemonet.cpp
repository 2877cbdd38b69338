#include "phemonet/cli.hpp"

int main(int argc, char** argv) { return phemonet::cli::run(argc, argv); }
