#include "advshift/cli.hpp"

int main(int argc, char** argv) { return advshift::run_cli(argc, argv); }
