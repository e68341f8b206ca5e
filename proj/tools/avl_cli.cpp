#include "avl/cli.hpp"

int main(int argc, char** argv) { return avl::cli::run(argc, argv); }
