#include "tcas/cli.hpp"

int main(int argc, char** argv) { return tcas::cli::dispatch(argc, argv); }
