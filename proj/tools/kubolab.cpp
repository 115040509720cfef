#include "kubolab/cli.hpp"

int main(int argc, char** argv) { return kubolab::cli::run(argc, argv); }
