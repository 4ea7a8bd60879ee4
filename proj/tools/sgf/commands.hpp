// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "CLI11.hpp"

namespace sgf::cli {

struct Command {
  CLI::App* app;
  std::function<void()> run;
};

/// Registers every subcommand on `app`. Each runner throws on failure.
std::vector<Command> register_commands(CLI::App& app);

}  // namespace sgf::cli
