// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>

#include "CLI11.hpp"
#include "sgf/navigator.hpp"
#include "sgf/numerics.hpp"
#include "sgf/oracle.hpp"

namespace sgf::cli {

struct OracleFlags {
  std::string oracle = "sigmoid-attrs";
  std::size_t d = 16;
  std::size_t nc = 4;
  std::uint64_t seed = 0;
};

void add_oracle_flags(CLI::App& app, OracleFlags& flags);
OracleSpec resolve_spec(const OracleFlags& flags);
std::unique_ptr<Oracle> open_oracle(const OracleFlags& flags);

struct NavFlags {
  double step_size = 0.2;
  std::size_t order = 1;
  std::size_t max_steps = 50;
  double tol = 0.05;
  bool fast = false;
  bool no_final_check = false;
  std::string inverse = "neumann";
};

void add_nav_flags(CLI::App& app, NavFlags& flags);
NavConfig to_config(const NavFlags& flags);

/// Inline JSON array ("[1, 2]") or "@path" naming a file holding one.
Vector parse_vector(const std::string& text);
std::string format_vector(ConstSpan v);

bool debug_enabled();
void debug(const std::string& message);

/// Bookkeeping for one command run; written as <output>.manifest.json.
class Manifest {
 public:
  explicit Manifest(std::string command);

  nlohmann::json& config() { return config_; }
  void seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
  void input(const std::filesystem::path& p) { inputs_.push_back(p.string()); }
  void output(const std::filesystem::path& p) { outputs_.push_back(p.string()); }
  void oracle_calls(std::uint64_t n) { oracle_calls_ = n; }

  void write(const std::filesystem::path& primary_output) const;

 private:
  std::string command_;
  nlohmann::json config_ = nlohmann::json::object();
  nlohmann::json seeds_ = nlohmann::json::object();
  nlohmann::json inputs_ = nlohmann::json::array();
  nlohmann::json outputs_ = nlohmann::json::array();
  std::uint64_t oracle_calls_ = 0;
  std::chrono::steady_clock::time_point start_;
};

std::filesystem::path partial_path(const std::filesystem::path& p);
std::filesystem::path sibling(const std::filesystem::path& p, const std::string& suffix);

}  // namespace sgf::cli
