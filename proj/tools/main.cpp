#include "transfig/cli.hpp"

int main(int argc, char** argv) { return transfig::run_cli(argc, argv); }
