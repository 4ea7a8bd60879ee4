// SPDX-License-Identifier: Apache-2.0
#include "common.hpp"

#include <cstdio>
#include <cstdlib>

#include "sgf/errors.hpp"
#include "sgf/io.hpp"

namespace sgf::cli {

void add_oracle_flags(CLI::App& app, OracleFlags& flags) {
  app.add_option("--oracle", flags.oracle, "Oracle spec \"kind:key=val,...\" or \"external:cmd=...\"")
      ->capture_default_str();
  app.add_option("--d", flags.d, "Latent dimension (when the oracle spec omits it)")->capture_default_str();
  app.add_option("--nc", flags.nc, "Condition dimension (when the oracle spec omits it)")->capture_default_str();
  app.add_option("--seed", flags.seed, "Seed for the oracle and for sampling")->capture_default_str();
}

OracleSpec resolve_spec(const OracleFlags& flags) {
  OracleSpec spec = OracleSpec::parse(flags.oracle, flags.d, flags.nc, flags.seed);
  spec.validate();
  return spec;
}

std::unique_ptr<Oracle> open_oracle(const OracleFlags& flags) {
  const OracleSpec spec = resolve_spec(flags);
  debug("oracle " + spec.canonical());
  return build_oracle(spec);
}

void add_nav_flags(CLI::App& app, NavFlags& flags) {
  app.add_option("--step-size", flags.step_size, "Step size lambda")->capture_default_str();
  app.add_option("--order", flags.order, "Neumann series order m")->capture_default_str();
  app.add_option("--max-steps", flags.max_steps, "Iteration budget n")->capture_default_str();
  app.add_option("--tol", flags.tol, "Stop when ||c - c1||_inf <= tol")->capture_default_str();
  app.add_flag("--fast", flags.fast, "Extrapolate conditions instead of querying the oracle each step");
  app.add_flag("--no-final-check", flags.no_final_check, "With --fast, skip the final oracle query");
  app.add_option("--inverse", flags.inverse, "neumann or exact")
      ->check(CLI::IsMember({"neumann", "exact"}))
      ->capture_default_str();
}

NavConfig to_config(const NavFlags& flags) {
  NavConfig cfg;
  cfg.step_size = flags.step_size;
  cfg.neumann_order = flags.order;
  cfg.max_steps = flags.max_steps;
  cfg.converge_tol = flags.tol;
  cfg.fast = flags.fast;
  cfg.final_check = flags.fast && !flags.no_final_check;
  cfg.inverse = inverse_mode_from_string(flags.inverse);
  cfg.validate();
  return cfg;
}

Vector parse_vector(const std::string& text) {
  std::string body = text;
  if (!text.empty() && text.front() == '@') body = read_file(text.substr(1));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw InvalidArgument("expected a JSON array of numbers, got '" + text + "'");
  }
  if (!j.is_array()) throw InvalidArgument("expected a JSON array of numbers, got '" + text + "'");
  Vector v;
  for (const auto& x : j) {
    if (!x.is_number()) throw InvalidArgument("expected a JSON array of numbers, got '" + text + "'");
    v.push_back(x.get<double>());
  }
  return v;
}

std::string format_vector(ConstSpan v) { return nlohmann::json(Vector(v.begin(), v.end())).dump(); }

bool debug_enabled() {
  const char* level = std::getenv("SGF_LOG");
  return level != nullptr && std::string(level) == "debug";
}

void debug(const std::string& message) {
  if (debug_enabled()) std::fprintf(stderr, "[sgf debug] %s\n", message.c_str());
}

Manifest::Manifest(std::string command) : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

void Manifest::write(const std::filesystem::path& primary_output) const {
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  const nlohmann::json doc = {{"command", command_},
                              {"config", config_},
                              {"seeds", seeds_},
                              {"inputs", inputs_},
                              {"outputs", outputs_},
                              {"version", SGF_VERSION},
                              {"duration_seconds", seconds},
                              {"oracle_calls", oracle_calls_}};
  const auto path = sibling(primary_output, ".manifest.json");
  atomic_write(path, doc.dump(2) + "\n");
  debug("wrote " + path.string());
}

std::filesystem::path partial_path(const std::filesystem::path& p) { return sibling(p, ".partial"); }

std::filesystem::path sibling(const std::filesystem::path& p, const std::string& suffix) {
  return std::filesystem::path(p.string() + suffix);
}

}  // namespace sgf::cli
