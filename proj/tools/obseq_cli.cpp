#include "obseq/cli.hpp"

int main(int argc, char** argv) { return obseq::cli::run(argc, argv); }
