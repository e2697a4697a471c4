#include "specflow/cli.hpp"

int main(int argc, char** argv) { return specflow::run_cli(argc, argv); }
