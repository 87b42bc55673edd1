#include <iostream>

#include "cardaudit/cli.hpp"

int main(int argc, char** argv) { return cardaudit::run_cli(argc, argv, std::cout, std::cerr); }
