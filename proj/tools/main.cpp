#include "cli.hpp"

int main(int argc, char **argv) { return chaoslink::cli_main(argc, argv); }
