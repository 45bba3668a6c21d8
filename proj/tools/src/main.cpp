#include "stonewalk/cli.hpp"

int main(int argc, char** argv) { return stonewalk::cli_main(argc, argv); }
