#include "anomalygen/pipeline.hpp"

int main(int argc, char** argv) { return anomalygen::run_cli(argc, argv); }
