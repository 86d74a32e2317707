#include "ghzsim/cli.hpp"

int main(int argc, char** argv) { return ghzsim::run_cli(argc, argv); }
