// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <vector>

#include "sgf/auxmap.hpp"
#include "sgf/metrics.hpp"
#include "sgf/navigator.hpp"
#include "sgf/oracle.hpp"

namespace sgf {

struct EvalConfig {
  /// max_steps values swept, strictly increasing.
  std::vector<std::size_t> strengths{5, 10, 15, 20, 25, 30};
  std::size_t samples = 100;
  /// Target attribute; every sample edits this one.
  std::size_t attr = 0;
  /// Requested binary target (0 or 1) before inversion.
  double target = 1.0;
  NavConfig nav;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  void validate(std::size_t n_c) const;
};

struct EvalSample {
  std::size_t index = 0;
  Vector z0;
  double target = 1.0;
};

/// Seeded starting points with inverted targets. Costs one oracle call per
/// sample.
std::vector<EvalSample> eval_samples(Oracle& oracle, const EvalConfig& cfg);

struct StrengthResult {
  std::size_t strength = 0;
  std::vector<SampleOutcome> outcomes;
  std::size_t errors = 0;
  std::size_t converged = 0;
};

struct EvalResult {
  MdcCurve curve;
  std::vector<StrengthResult> per_strength;
  std::vector<double> accumulated;
  double mds = 0.0;
  std::size_t best = 0;
  std::size_t errors = 0;
  std::uint64_t oracle_calls = 0;
};

/// Navigates every sample at every strength. A navigation that throws counts
/// as an unchanged sample and is tallied in `errors`.
EvalResult evaluate(const AuxiliaryMapping& f, Oracle& oracle, const EvalConfig& cfg);

nlohmann::json to_json(const EvalResult& result);

}  // namespace sgf
