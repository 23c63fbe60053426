// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#include "ptloss/cli.hpp"

int main(int argc, char** argv) { return ptloss::cli::run(argc, argv); }
