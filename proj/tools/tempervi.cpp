#include "tempervi/cli.hpp"

int main(int argc, char** argv) { return tempervi::run_cli(argc, argv); }
