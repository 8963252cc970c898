#include "rdlab/cli.hpp"

int main(int argc, char** argv) { return rdlab::run_cli(argc, argv); }
