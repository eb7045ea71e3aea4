#include "fluxforms/cli.hpp"

int main(int argc, char** argv) { return fluxforms::run_cli(argc, argv); }
