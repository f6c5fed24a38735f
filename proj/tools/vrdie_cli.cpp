#include "vrdie/cli/commands.hpp"

int main(int argc, char** argv) { return vrdie::cli::run(argc, argv); }
