// SPDX-License-Identifier: Apache-2.0
#include "sgf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "sgf/errors.hpp"
#include "sgf/io.hpp"

namespace sgf {

bool attribute_changed(double before, double after) { return std::abs(after - before) > kChangeThreshold; }

void SampleOutcome::validate() const {
  if (scores_before.size() != scores_after.size()) throw InvalidArgument("SampleOutcome: score lengths differ");
  if (target_attr >= scores_before.size()) throw InvalidArgument("SampleOutcome: target_attr out of range");
}

bool SampleOutcome::succeeded() const {
  validate();
  const double before = scores_before[target_attr];
  const double after = scores_after[target_attr];
  if (!attribute_changed(before, after)) return false;
  return std::abs(target_score - after) < std::abs(target_score - before);
}

std::size_t SampleOutcome::side_effects() const {
  validate();
  std::size_t n = 0;
  for (std::size_t k = 0; k < scores_before.size(); ++k) {
    if (k != target_attr && attribute_changed(scores_before[k], scores_after[k])) ++n;
  }
  return n;
}

double accuracy(const std::vector<SampleOutcome>& outcomes) {
  if (outcomes.empty()) throw InvalidArgument("accuracy: no outcomes");
  const auto hits = std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.succeeded(); });
  return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

double disentanglement(const std::vector<SampleOutcome>& outcomes, std::size_t m) {
  if (m < 2) throw InvalidArgument("disentanglement: need at least two attributes");
  if (outcomes.empty()) throw InvalidArgument("disentanglement: no outcomes");
  double sum = 0.0;
  for (const auto& o : outcomes) {
    if (o.scores_before.size() != m) throw InvalidArgument("disentanglement: outcome length differs from M");
    sum += 1.0 - static_cast<double>(o.side_effects()) / static_cast<double>(m - 1);
  }
  return sum / static_cast<double>(outcomes.size());
}

void MdcCurve::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!(p.accuracy >= 0.0 && p.accuracy <= 1.0) || !(p.disentanglement >= 0.0 && p.disentanglement <= 1.0)) {
      throw InvalidArgument("MdcCurve: accuracy and disentanglement must lie in [0, 1]");
    }
    if (i > 0 && !(p.strength > points[i - 1].strength)) {
      throw InvalidArgument("MdcCurve: strengths must be strictly increasing");
    }
  }
}

std::vector<double> accumulated_mds(const MdcCurve& curve) {
  if (curve.points.empty()) throw InvalidArgument("mds: empty curve");
  curve.validate();
  std::vector<double> acc;
  acc.reserve(curve.points.size());
  double x = 0.0;
  double y = 1.0;
  double total = 0.0;
  for (const auto& p : curve.points) {
    total += (p.accuracy - x) * (p.disentanglement + y) / 2.0;
    acc.push_back(total);
    x = p.accuracy;
    y = p.disentanglement;
  }
  return acc;
}

double mds(const MdcCurve& curve) {
  const auto acc = accumulated_mds(curve);
  return *std::max_element(acc.begin(), acc.end());
}

double harmonic_mean(double a, double b) {
  if (a < 0.0 || b < 0.0) throw InvalidArgument("harmonic_mean: arguments must be non-negative");
  if (a + b == 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

std::size_t select_best_strength(const MdcCurve& curve) {
  if (curve.points.empty()) throw InvalidArgument("select_best_strength: empty curve");
  curve.validate();
  std::size_t best = 0;
  double best_hm = harmonic_mean(curve.points[0].accuracy, curve.points[0].disentanglement);
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const double hm = harmonic_mean(curve.points[i].accuracy, curve.points[i].disentanglement);
    if (hm > best_hm) {
      best = i;
      best_hm = hm;
    }
  }
  return best;
}

double invert_target(double initial_score, double requested_target) {
  const bool wants_high = requested_target > kChangeThreshold;
  const bool wants_low = requested_target < kChangeThreshold;
  if ((wants_high && initial_score > kChangeThreshold) || (wants_low && initial_score < kChangeThreshold)) {
    return 1.0 - requested_target;
  }
  return requested_target;
}

std::string to_csv(const MdcCurve& curve) {
  std::string out = "strength,accuracy,disentanglement\n";
  char buf[128];
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.strength, p.accuracy, p.disentanglement);
    out += buf;
  }
  return out;
}

MdcCurve mdc_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("MDC CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "strength,accuracy,disentanglement") throw InvalidArgument("MDC CSV: unexpected header '" + line + "'");

  MdcCurve curve;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    MdcPoint p;
    std::istringstream row(line);
    std::string cell[3];
    for (auto& c : cell) {
      if (!std::getline(row, c, ',')) throw InvalidArgument("MDC CSV: line " + std::to_string(lineno) + " has too few fields");
    }
    std::string extra;
    if (std::getline(row, extra)) throw InvalidArgument("MDC CSV: line " + std::to_string(lineno) + " has too many fields");
    try {
      std::size_t used = 0;
      double* dst[3] = {&p.strength, &p.accuracy, &p.disentanglement};
      for (int k = 0; k < 3; ++k) {
        *dst[k] = std::stod(cell[k], &used);
        if (used != cell[k].size()) throw InvalidArgument("trailing characters");
      }
    } catch (const std::exception&) {
      throw InvalidArgument("MDC CSV: line " + std::to_string(lineno) + " is not numeric");
    }
    curve.points.push_back(p);
  }
  curve.validate();
  return curve;
}

MdcCurve read_mdc_csv(const std::filesystem::path& path) { return mdc_from_csv(read_file(path)); }

void write_mdc_csv(const MdcCurve& curve, const std::filesystem::path& path) { atomic_write(path, to_csv(curve)); }

}  // namespace sgf
