#include "strokefield/io/cli.hpp"

int main(int argc, char** argv) { return strokefield::cli_main(argc, argv); }
