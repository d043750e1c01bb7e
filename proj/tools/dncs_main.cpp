#include "dncs/scenario.hpp"

int main(int argc, char** argv) { return dncs::run_cli(argc, argv); }
