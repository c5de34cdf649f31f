#include "alkit/cli.hpp"

int main(int argc, char** argv) { return alkit::run_cli(argc, argv); }
