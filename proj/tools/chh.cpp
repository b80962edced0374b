#include "chh/cli.hpp"

int main(int argc, char** argv) { return chh::main_entry(argc, argv); }
