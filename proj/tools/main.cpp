#include "cli.hpp"

int main(int argc, char** argv) { return hfo::cli::run({argv, argv + argc}); }
