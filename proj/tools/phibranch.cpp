#include "phibranch/cli.hpp"

int main(int argc, char** argv) { return phibranch::run_command(argc, argv); }
