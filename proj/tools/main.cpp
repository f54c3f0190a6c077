// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Subcommands are thin wrappers over run_command();
// see include/heatpot/run.hpp for the config schema.

#include "heatpot/run.hpp"

int main(int argc, char** argv) { return heatpot::run_main(argc, argv); }
