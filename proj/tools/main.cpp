#include "cli.hpp"

int main(int argc, char** argv) { return ocgs::run_cli(argc, argv); }
