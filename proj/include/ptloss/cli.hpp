// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace ptloss::cli {

/// Runs one subcommand. `args` excludes the program name.
/// Returns 0 on success or help, 1 on a domain error (one line
/// "error: <kind>: <message>" on `err`), 2 on a usage, io or schema error.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace ptloss::cli
