#include "bmnn/experiment.hpp"

int main(int argc, char** argv) { return bmnn::cli_main(argc, argv); }
