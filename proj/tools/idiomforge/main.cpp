#include "cli.hpp"

int main(int argc, char** argv) { return idiomforge::cli::run(argc, argv); }
