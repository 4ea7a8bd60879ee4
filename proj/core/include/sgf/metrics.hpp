// SPDX-License-Identifier: Apache-2.0
//
// Manipulation accuracy, disentanglement and the area-based score built on
// the accuracy/disentanglement curve.
#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "sgf/numerics.hpp"

namespace sgf {

/// Score change needed before an attribute counts as changed.
inline constexpr double kChangeThreshold = 0.5;

/// |after - before| > 0.5 (strict).
bool attribute_changed(double before, double after);

struct SampleOutcome {
  std::size_t target_attr = 0;
  Vector scores_before;
  Vector scores_after;
  /// Desired score of the target attribute; success also requires movement
  /// toward it.
  double target_score = 1.0;

  void validate() const;
  bool succeeded() const;
  /// Non-target attributes that changed.
  std::size_t side_effects() const;
};

double accuracy(const std::vector<SampleOutcome>& outcomes);
double disentanglement(const std::vector<SampleOutcome>& outcomes, std::size_t m);

struct MdcPoint {
  double strength = 0.0;
  double accuracy = 0.0;
  double disentanglement = 1.0;
};

struct MdcCurve {
  std::vector<MdcPoint> points;
  void validate() const;
};

/// Signed trapezoid area accumulated point by point from the origin (0, 1).
std::vector<double> accumulated_mds(const MdcCurve& curve);
/// Maximum over accumulated_mds.
double mds(const MdcCurve& curve);

double harmonic_mean(double a, double b);

/// Index of the point with the highest harmonic mean; ties go to the lower
/// strength.
std::size_t select_best_strength(const MdcCurve& curve);

/// Binary targets: when the initial score already sits on the requested side
/// of 0.5 the target flips to the opposite value (1 - target).
double invert_target(double initial_score, double requested_target);

std::string to_csv(const MdcCurve& curve);
MdcCurve mdc_from_csv(const std::string& text);
MdcCurve read_mdc_csv(const std::filesystem::path& path);
void write_mdc_csv(const MdcCurve& curve, const std::filesystem::path& path);

}  // namespace sgf
