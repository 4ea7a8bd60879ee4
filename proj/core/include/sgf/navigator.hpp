// SPDX-License-Identifier: Apache-2.0
//
// Latent navigation along the surrogate gradient field
//
//     H(z) = (I - dF/dz)^-1 dF/dc (c1 - c0),       dz/dt = H(z),
//
// integrated with forward Euler. Each step moves by
//
//     dz = sum_{j=0..m} (dF/dz)^j dF/dc dc,        dc = lambda (c1 - c0),
//
// with both Jacobians taken at the traced pair (z^(i-1), c^(i-1)). In the
// standard mode c^(i) is re-queried from the oracle after every step; the fast
// mode extrapolates c^(i) = c0 + i dc and talks to the oracle only once (plus
// an optional final check).
#pragma once

#include <cstddef>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgf/auxmap.hpp"
#include "sgf/numerics.hpp"
#include "sgf/oracle.hpp"

namespace sgf {

enum class InverseMode { kNeumann, kExact };

std::string to_string(InverseMode mode);
InverseMode inverse_mode_from_string(const std::string& text);

struct NavConfig {
  double step_size = 0.2;
  std::size_t neumann_order = 1;
  std::size_t max_steps = 50;
  /// L-infinity distance to c1 at which navigation stops.
  double converge_tol = 0.05;
  bool fast = false;
  /// Fast mode only: one extra oracle call to report the true endpoint.
  bool final_check = false;
  InverseMode inverse = InverseMode::kNeumann;
  /// Abort when ||z|| exceeds this.
  double divergence_bound = 1e6;
  /// Exact mode: reject (I - dF/dz) with a larger 1-norm condition number.
  double max_condition = 1e12;

  void validate() const;
};

nlohmann::json to_json(const NavConfig& cfg);
NavConfig nav_config_from_json(const nlohmann::json& j);

struct NavStep {
  std::size_t i = 0;
  Vector z;
  Vector c;
  Vector dz;  // z^(i) - z^(i-1); zeros for i = 0
  double dist = 0.0;  // ||c^(i) - c1||_inf
};

struct NavTrace {
  NavConfig config;
  Vector c0;
  Vector c1;
  std::vector<NavStep> steps;  // steps[0] is the initial state
  bool converged = false;
  std::size_t oracle_calls = 0;
  /// Fast mode with final_check: oracle value at the last z.
  std::optional<Vector> verified_c;

  const Vector& final_z() const { return steps.back().z; }
  /// The best known condition at the endpoint: verified_c when present.
  const Vector& final_c() const { return verified_c ? *verified_c : steps.back().c; }
  std::size_t executed_steps() const { return steps.empty() ? 0 : steps.size() - 1; }
};

nlohmann::json to_json(const NavTrace& trace);
NavTrace trace_from_json(const nlohmann::json& j);

/// Thrown on non-finite or runaway steps; carries the trace up to the failure.
class NavigationDiverged : public std::runtime_error {
 public:
  NavigationDiverged(const std::string& what, NavTrace partial);
  const NavTrace& partial_trace() const noexcept { return partial_; }

 private:
  NavTrace partial_;
};

using LinearOperator = std::function<Vector(ConstSpan)>;

/// sum_{j=0..m} X^j v, using m applications of `apply_x`.
Vector neumann_apply(const LinearOperator& apply_x, ConstSpan v, std::size_t m);

/// (I - dF/dz)^-1 dF/dc target_delta at (z, c), by truncated Neumann series
/// or a dense LU solve depending on cfg.inverse.
Vector surrogate_field(const AuxiliaryMapping& f, ConstSpan z, ConstSpan c, ConstSpan target_delta,
                       const NavConfig& cfg);

NavTrace navigate(const AuxiliaryMapping& f, Oracle& oracle, ConstSpan z0, ConstSpan c1, const NavConfig& cfg);

std::size_t count_oracle_calls(const NavTrace& trace);

}  // namespace sgf
