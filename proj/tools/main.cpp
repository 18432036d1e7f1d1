#include "lfdx/cli.hpp"

int main(int argc, char** argv) { return lfdx::cli::run(argc, argv); }
