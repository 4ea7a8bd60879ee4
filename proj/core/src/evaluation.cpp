// SPDX-License-Identifier: Apache-2.0
#include "sgf/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "sgf/errors.hpp"

namespace sgf {

void EvalConfig::validate(std::size_t n_c) const {
  if (strengths.empty()) throw InvalidArgument("evaluate: no strengths given");
  for (std::size_t i = 0; i < strengths.size(); ++i) {
    if (strengths[i] == 0) throw InvalidArgument("evaluate: strengths must be >= 1");
    if (i > 0 && strengths[i] <= strengths[i - 1]) throw InvalidArgument("evaluate: strengths must be strictly increasing");
  }
  if (samples == 0) throw InvalidArgument("evaluate: samples must be >= 1");
  if (attr >= n_c) throw InvalidArgument("evaluate: attribute index out of range");
  if (target != 0.0 && target != 1.0) throw InvalidArgument("evaluate: target must be 0 or 1");
  if (jobs == 0) throw InvalidArgument("evaluate: jobs must be >= 1");
  if (n_c < 2) throw InvalidArgument("evaluate: need at least two attributes");
  nav.validate();
}

std::vector<EvalSample> eval_samples(Oracle& oracle, const EvalConfig& cfg) {
  std::vector<EvalSample> out;
  out.reserve(cfg.samples);
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    Rng rng(derive_seed(cfg.seed, i));
    EvalSample s{i, sample_gaussian(rng, oracle.latent_dim()), cfg.target};
    s.target = invert_target(oracle.eval(s.z0)[cfg.attr], cfg.target);
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

struct SampleRun {
  SampleOutcome outcome;
  bool error = false;
  bool converged = false;
};

SampleRun run_sample(const AuxiliaryMapping& f, Oracle& oracle, const EvalSample& s, const EvalConfig& cfg,
                     std::size_t strength) {
  SampleRun run;
  run.outcome.target_attr = cfg.attr;
  run.outcome.target_score = s.target;
  run.outcome.scores_before = oracle.eval(s.z0);
  Vector c1 = run.outcome.scores_before;
  c1[cfg.attr] = s.target;
  NavConfig nav = cfg.nav;
  nav.max_steps = strength;
  try {
    const NavTrace trace = navigate(f, oracle, s.z0, c1, nav);
    run.converged = trace.converged;
    if (nav.fast && !trace.verified_c) {
      run.outcome.scores_after = oracle.eval(trace.final_z());
    } else {
      run.outcome.scores_after = trace.final_c();
    }
  } catch (const std::exception&) {
    run.error = true;
    run.outcome.scores_after = run.outcome.scores_before;
  }
  return run;
}

}  // namespace

EvalResult evaluate(const AuxiliaryMapping& f, Oracle& oracle, const EvalConfig& cfg) {
  cfg.validate(oracle.cond_dim());
  if (f.latent_dim() != oracle.latent_dim() || f.cond_dim() != oracle.cond_dim()) {
    throw InvalidArgument("evaluate: F and oracle dimensions differ");
  }
  const std::uint64_t calls_before = oracle.call_count();
  const std::vector<EvalSample> samples = eval_samples(oracle, cfg);
  const std::size_t jobs = oracle.concurrent() ? std::min(cfg.jobs, cfg.samples) : 1;

  EvalResult result;
  for (const std::size_t strength : cfg.strengths) {
    std::vector<SampleRun> runs(samples.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < samples.size(); i = next++) {
        runs[i] = run_sample(f, oracle, samples[i], cfg, strength);
      }
    };
    if (jobs == 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }

    StrengthResult sr;
    sr.strength = strength;
    for (auto& r : runs) {
      sr.errors += r.error ? 1 : 0;
      sr.converged += r.converged ? 1 : 0;
      sr.outcomes.push_back(std::move(r.outcome));
    }
    result.curve.points.push_back(MdcPoint{static_cast<double>(strength), accuracy(sr.outcomes),
                                           disentanglement(sr.outcomes, oracle.cond_dim())});
    result.errors += sr.errors;
    result.per_strength.push_back(std::move(sr));
  }
  result.accumulated = accumulated_mds(result.curve);
  result.mds = mds(result.curve);
  result.best = select_best_strength(result.curve);
  result.oracle_calls = oracle.call_count() - calls_before;
  return result;
}

nlohmann::json to_json(const EvalResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < result.curve.points.size(); ++i) {
    const auto& p = result.curve.points[i];
    const auto& sr = result.per_strength[i];
    rows.push_back({{"strength", sr.strength},
                    {"accuracy", p.accuracy},
                    {"disentanglement", p.disentanglement},
                    {"harmonic_mean", harmonic_mean(p.accuracy, p.disentanglement)},
                    {"accumulated_mds", result.accumulated[i]},
                    {"converged", sr.converged},
                    {"errors", sr.errors}});
  }
  return {{"points", rows},
          {"mds", result.mds},
          {"best_index", result.best},
          {"best_strength", result.per_strength.at(result.best).strength},
          {"errors", result.errors},
          {"oracle_calls", result.oracle_calls}};
}

}  // namespace sgf
