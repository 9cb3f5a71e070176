#include "lstn/cli.hpp"

int main(int argc, char** argv) { return lstn::run_cli(argc, argv); }
