#include "tiebreak/experiment.hpp"

int main(int argc, char** argv) { return tiebreak::run_cli(argc, argv); }
