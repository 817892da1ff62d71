// SPDX-License-Identifier: Apache-2.0
#include "logo/cli.hpp"

int main(int argc, char** argv) { return logo::run_cli(argc, argv); }
