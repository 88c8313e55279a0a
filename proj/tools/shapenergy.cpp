#include "shapenergy/cli.hpp"

int main(int argc, char** argv) { return shapenergy::cli::run(argc, argv); }
