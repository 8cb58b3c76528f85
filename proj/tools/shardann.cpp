#include "shardann/pipeline.hpp"

int main(int argc, char** argv) { return shardann::run_cli(argc, argv); }
