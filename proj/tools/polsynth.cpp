#include "polsynth/cli.hpp"

int main(int argc, char** argv) { return polsynth::cli::main(argc, argv); }
