#include "zvcv/commands.hpp"

int main(int argc, char** argv) { return zvcv::run_cli(argc, argv); }
