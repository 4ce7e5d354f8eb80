#include "kfs/cli.hpp"

int main(int argc, char** argv) { return kfs::cli::run(argc, argv); }
