#include "epcag/cli.hpp"

int main(int argc, char** argv) { return epcag::cli::run(argc, argv); }
