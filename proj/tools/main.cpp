// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "commands.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return mvr::app::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
