#include "taprbm/cli.hpp"

int main(int argc, char** argv) { return taprbm::run_cli(argc, argv); }
