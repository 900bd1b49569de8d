#include "stochbond/cli.hpp"

int main(int argc, char** argv) { return stochbond::run_cli(argc, argv); }
