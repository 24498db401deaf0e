#include "gproc/pipeline.hpp"

int main(int argc, char** argv) { return gproc::cli_main(argc, argv); }
