#include <iostream>

#include "osslc/cli.hpp"

int main(int argc, char** argv) { return osslc::run_cli(argc, argv, std::cout, std::cerr); }
