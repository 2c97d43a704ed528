#include "unitprior/cli.hpp"

int main(int argc, char** argv) { return unitprior::cli::main(argc, argv); }
