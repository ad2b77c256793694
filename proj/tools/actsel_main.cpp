#include "actsel/cli.hpp"

int main(int argc, char** argv) { return actsel::cli_main(argc, argv); }
