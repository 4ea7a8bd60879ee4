// SPDX-License-Identifier: Apache-2.0
#include "sgf/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "sgf/errors.hpp"

namespace sgf {

nlohmann::json to_json(const OptTrace& trace) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : trace.records) records.push_back({{"iteration", r.iteration}, {"z", r.z}, {"loss", r.loss}});
  return {{"records", records},
          {"final_z", trace.final_z},
          {"final_loss", trace.final_loss},
          {"converged", trace.converged}};
}

OptTrace latent_opt(Oracle& oracle, ConstSpan z0, ConstSpan c1, const LatentOptConfig& cfg) {
  if (!oracle.has_gradient()) {
    throw UnsupportedOperation("latent_opt: the oracle cannot be back-propagated");
  }
  if (z0.size() != oracle.latent_dim() || c1.size() != oracle.cond_dim()) {
    throw InvalidArgument("latent_opt: dimension mismatch");
  }
  if (cfg.record_interval == 0) throw InvalidArgument("latent_opt: record_interval must be >= 1");

  OptTrace trace;
  Vector z(z0.begin(), z0.end());
  AdamState adam(z.size(), AdamHyperParams{cfg.lr});

  for (std::size_t it = 0;; ++it) {
    const Vector residual = subtract(oracle.eval(z), c1);
    const double loss = dot(residual, residual);
    if (!std::isfinite(loss)) throw InvalidArgument("latent_opt: non-finite loss");
    const bool done = loss <= cfg.tol || it == cfg.iterations;
    if (it % cfg.record_interval == 0 || done) trace.records.push_back(OptRecord{it, z, loss});
    if (done) {
      trace.final_z = z;
      trace.final_loss = loss;
      trace.converged = loss <= cfg.tol;
      return trace;
    }
    // grad = 2 J^T r
    Vector grad = matvec_transposed(oracle.eval_grad(z), residual);
    for (double& g : grad) g *= 2.0;
    adam.step(z, grad);
  }
}

Vector linear_path(ConstSpan z0, ConstSpan z1, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("linear_path: t must lie in [0, 1]");
  if (z0.size() != z1.size()) throw InvalidArgument("linear_path: dimension mismatch");
  Vector out(z0.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - t) * z0[i] + t * z1[i];
  return out;
}

Vector transfer_direction(ConstSpan z_other, ConstSpan z0, ConstSpan z1, double scale) {
  if (z_other.size() != z0.size() || z0.size() != z1.size()) {
    throw InvalidArgument("transfer_direction: dimension mismatch");
  }
  Vector out(z_other.begin(), z_other.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale * (z1[i] - z0[i]);
  return out;
}

double path_deviation(const std::vector<Vector>& path) {
  if (path.size() < 2) throw InvalidArgument("path_deviation: need at least two points");
  const Vector& a = path.front();
  const Vector chord = subtract(path.back(), a);
  const double length2 = dot(chord, chord);
  if (!(length2 > 0.0)) throw UndefinedDeviation("path_deviation: endpoints coincide");

  double worst = 0.0;
  for (const auto& p : path) {
    const Vector rel = subtract(p, a);
    const double t = std::clamp(dot(rel, chord) / length2, 0.0, 1.0);
    Vector off = rel;
    axpy(-t, chord, off);
    worst = std::max(worst, norm2(off));
  }
  return worst / std::sqrt(length2);
}

double path_deviation(const NavTrace& trace) {
  std::vector<Vector> path;
  path.reserve(trace.steps.size());
  for (const auto& s : trace.steps) path.push_back(s.z);
  return path_deviation(path);
}

}  // namespace sgf
