#include <iostream>

#include "blowup_lab/cli.hpp"

int main(int argc, char** argv) { return blowup_lab::dispatch(argc, argv, std::cout, std::cerr); }
