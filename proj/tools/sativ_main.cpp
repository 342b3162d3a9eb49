#include "sativ/cli.hpp"

int main(int argc, char** argv) { return sativ::run_cli(argc, argv); }
