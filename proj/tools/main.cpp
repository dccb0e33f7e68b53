#include "hypball/cli.hpp"

int main(int argc, char** argv) { return hypball::cli::run(argc, argv); }
