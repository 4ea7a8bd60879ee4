// SPDX-License-Identifier: Apache-2.0
//
// Comparison methods: direct latent-code optimisation through the oracle's
// gradient, and straight-line analyses of navigation paths.
#pragma once

#include <cstddef>
#include <nlohmann/json.hpp>
#include <vector>

#include "sgf/navigator.hpp"
#include "sgf/numerics.hpp"
#include "sgf/oracle.hpp"

namespace sgf {

struct OptRecord {
  std::size_t iteration = 0;
  Vector z;
  double loss = 0.0;
};

struct OptTrace {
  std::vector<OptRecord> records;
  Vector final_z;
  double final_loss = 0.0;
  bool converged = false;
};

nlohmann::json to_json(const OptTrace& trace);

struct LatentOptConfig {
  double lr = 2e-4;
  std::size_t iterations = 10000;
  double tol = 1e-6;
  /// Record every n-th iteration (the first and last are always kept).
  std::size_t record_interval = 100;
};

/// Adam on ||phi(z) - c1||^2 using the oracle's analytic Jacobian. Throws
/// UnsupportedOperation for oracles without gradients.
OptTrace latent_opt(Oracle& oracle, ConstSpan z0, ConstSpan c1, const LatentOptConfig& cfg = {});

/// (1 - t) z0 + t z1, t in [0, 1].
Vector linear_path(ConstSpan z0, ConstSpan z1, double t);

/// z_other + scale (z1 - z0): reuse the displacement of one edit elsewhere.
Vector transfer_direction(ConstSpan z_other, ConstSpan z0, ConstSpan z1, double scale);

/// Largest distance from a path point to the chord between its endpoints,
/// divided by the chord length. 0 for straight paths.
double path_deviation(const std::vector<Vector>& path);
double path_deviation(const NavTrace& trace);

}  // namespace sgf
