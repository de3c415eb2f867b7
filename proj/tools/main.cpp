#include "sisom/cli.hpp"

int main(int argc, char** argv) { return sisom::run_cli(argc, argv); }
