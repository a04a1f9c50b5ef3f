#include "cli.hpp"

int main(int argc, char** argv) { return pista::cli::run(argc, argv); }
