// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <exception>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Latent navigation along surrogate gradient fields"};
  app.set_version_flag("--version", SGF_VERSION);
  app.require_subcommand(1);
  const auto commands = sgf::cli::register_commands(app);

  CLI11_PARSE(app, argc, argv);

  for (const auto& cmd : commands) {
    if (!cmd.app->parsed()) continue;
    try {
      cmd.run();
      return 0;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "sgf %s: error: %s\n", cmd.app->get_name().c_str(), e.what());
      return 1;
    }
  }
  return 1;
}
