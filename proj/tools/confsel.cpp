#include "confsel/cli.hpp"

int main(int argc, char** argv) { return confsel::cli::run(argc, argv); }
