#include "econfreq/cli.hpp"

int main(int argc, char** argv) { return econfreq::run_command(argc, argv); }
