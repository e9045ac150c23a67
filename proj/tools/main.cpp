// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "app/cli.hpp"

int main(int argc, char** argv) {
  return vmouse::app::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
