#include "imgnb/cli.hpp"

int main(int argc, char** argv) { return imgnb::cli_main(argc, argv); }
