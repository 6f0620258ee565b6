#include "qsq/cli.hpp"

int main(int argc, char** argv) { return qsq::cli::run(argc, argv); }
