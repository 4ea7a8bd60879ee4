// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <cstdio>
#include <memory>
#include <optional>
#include <sstream>

#include "common.hpp"
#include "sgf/baselines.hpp"
#include "sgf/errors.hpp"
#include "sgf/evaluation.hpp"
#include "sgf/io.hpp"
#include "sgf/metrics.hpp"
#include "sgf/navigator.hpp"
#include "sgf/trainer.hpp"

namespace sgf::cli {

namespace {

constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kStartStream = 2;

nlohmann::json oracle_json(const OracleFlags& f) { return {{"oracle", resolve_spec(f).canonical()}}; }

nlohmann::json nav_json(const NavConfig& cfg) { return to_json(cfg); }

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) { atomic_write(path, doc.dump(2) + "\n"); }

// --- target selection shared by navigate / baseline / compare-linear -------

struct TargetFlags {
  std::string z0;
  std::string c1;
  std::optional<std::size_t> attr;
  std::optional<double> target;
};

void add_target_flags(CLI::App& app, TargetFlags& t) {
  app.add_option("--z0", t.z0, "Start latent (JSON array or @file); sampled from --seed when omitted");
  app.add_option("--c1", t.c1, "Target condition (JSON array or @file)");
  app.add_option("--attr", t.attr, "Target attribute index (with --target)");
  app.add_option("--target", t.target, "Target value for --attr; other attributes keep their start values");
}

Vector resolve_z0(const TargetFlags& t, std::size_t d, std::uint64_t seed) {
  if (!t.z0.empty()) return parse_vector(t.z0);
  Rng rng(derive_seed(seed, kStartStream));
  return sample_gaussian(rng, d);
}

/// Uses a private evaluation for the --attr shorthand so the navigation's own
/// call count is unaffected.
Vector resolve_c1(const TargetFlags& t, Oracle& oracle, ConstSpan z0) {
  if (!t.c1.empty()) {
    if (t.attr || t.target) throw InvalidArgument("give either --c1 or --attr/--target, not both");
    return parse_vector(t.c1);
  }
  if (!t.attr || !t.target) throw InvalidArgument("a target is required: --c1, or --attr with --target");
  if (z0.size() != oracle.latent_dim()) throw InvalidArgument("--z0 has the wrong dimension");
  Vector c1 = oracle.eval(z0);
  if (*t.attr >= c1.size()) throw InvalidArgument("--attr is out of range");
  c1[*t.attr] = *t.target;
  return c1;
}

void check_dims(const AuxMap& f, const Oracle& o) {
  if (f.latent_dim() != o.latent_dim() || f.cond_dim() != o.cond_dim()) {
    throw InvalidArgument("checkpoint dimensions (d=" + std::to_string(f.latent_dim()) + ", n_c=" +
                          std::to_string(f.cond_dim()) + ") do not match the oracle (d=" +
                          std::to_string(o.latent_dim()) + ", n_c=" + std::to_string(o.cond_dim()) + ")");
  }
}

void warn_oracle_mismatch(const Checkpoint& ckpt, const Oracle& oracle) {
  const auto recorded = ckpt.meta.value("oracle_digest", std::string());
  if (!recorded.empty() && recorded != to_hex(oracle.digest())) {
    std::fprintf(stderr, "sgf: warning: oracle differs from the one the checkpoint was trained against\n");
  }
}

// --- gen-data -------------------------------------------------------------

struct GenDataFlags {
  OracleFlags oracle;
  std::size_t count = 50000;
  std::string out;
};

void run_gen_data(const GenDataFlags& f) {
  if (f.count == 0) throw InvalidArgument("--count must be >= 1");
  Manifest manifest("gen-data");
  auto oracle = open_oracle(f.oracle);
  Rng rng(derive_seed(f.oracle.seed, kDataStream));
  const PairDataset data = build_dataset(*oracle, f.count, rng);
  save_dataset(data, f.out);

  manifest.config() = oracle_json(f.oracle);
  manifest.config()["count"] = f.count;
  manifest.seed("seed", f.oracle.seed);
  manifest.output(f.out);
  manifest.oracle_calls(oracle->call_count());
  manifest.write(f.out);
  std::printf("dataset %s\nd %zu\nn_c %zu\ncount %zu\noracle_digest %s\n", f.out.c_str(), data.d, data.n_c,
              data.pairs.size(), to_hex(data.oracle_digest).c_str());
}

// --- train ----------------------------------------------------------------

struct TrainFlags {
  std::string data;
  std::string out;
  std::string report;
  std::uint64_t seed = 0;
  std::size_t iterations = 20000;
  std::size_t batch = 8;
  double lr = 2e-4;
  std::size_t blocks = 6;
  std::size_t hidden = 64;
  std::size_t sn_steps = 1;
  std::size_t diag_interval = 1000;
};

void run_train(const TrainFlags& f) {
  Manifest manifest("train");
  const PairDataset data = load_dataset(f.data);
  ArchConfig arch;
  arch.latent_dim = data.d;
  arch.cond_dim = data.n_c;
  arch.n_blocks = f.blocks;
  arch.hidden = f.hidden;
  TrainConfig cfg;
  cfg.iterations = f.iterations;
  cfg.batch_size = f.batch;
  cfg.lr = f.lr;
  cfg.seed = f.seed;
  cfg.sn_power_steps_per_update = f.sn_steps;
  cfg.diag_interval = f.diag_interval;

  const std::filesystem::path report_path = f.report.empty() ? sibling(f.out, ".report.json") : std::filesystem::path(f.report);
  const nlohmann::json train_json = {{"iterations", cfg.iterations},
                                     {"batch_size", cfg.batch_size},
                                     {"lr", cfg.lr},
                                     {"seed", cfg.seed},
                                     {"sn_power_steps_per_update", cfg.sn_power_steps_per_update},
                                     {"diag_interval", cfg.diag_interval}};
  debug("training on " + std::to_string(data.pairs.size()) + " pairs");

  std::optional<TrainResult> result;
  try {
    result.emplace(train(data, arch, cfg));
  } catch (const TrainingDiverged& e) {
    nlohmann::json partial = to_json(e.partial_report());
    partial["last_finite_iteration"] = e.last_finite_iteration();
    write_json(partial_path(report_path), partial);
    throw;
  }

  const nlohmann::json meta = {{"seed", f.seed},
                               {"train", train_json},
                               {"dataset", f.data},
                               {"oracle_digest", to_hex(data.oracle_digest)}};
  save_checkpoint(result->map, meta, f.out);
  write_json(report_path, to_json(result->report));

  manifest.config() = {{"arch", to_json(arch)}, {"train", train_json}};
  manifest.seed("seed", f.seed);
  manifest.input(f.data);
  manifest.output(f.out);
  manifest.output(report_path);
  manifest.write(f.out);

  const auto& r = result->report;
  std::printf("checkpoint %s\nheldout_loss_initial %.6g\nheldout_loss_final %.6g\nheldout_relative_error %.6g\n",
              f.out.c_str(), r.initial_heldout_loss, r.final_heldout_loss, r.final_heldout_relative_error);
  if (!r.records.empty()) {
    std::printf("probe_jvp_c %.6g\nspectral_radius %.6g\n", r.records.back().probe_jvp_c,
                r.records.back().spectral_radius);
  }
  if (r.degenerate) std::fprintf(stderr, "sgf: warning: F ignores the condition (degenerate run)\n");
}

// --- navigate -------------------------------------------------------------

struct NavigateFlags {
  OracleFlags oracle;
  NavFlags nav;
  TargetFlags target;
  std::string checkpoint;
  std::string out;
};

void print_trace_summary(const NavTrace& trace) {
  const double dist = norm_inf(subtract(trace.final_c(), trace.c1));
  std::printf("converged %s\nsteps %zu\noracle_calls %zu\nfinal_distance %.6g\n", trace.converged ? "true" : "false",
              trace.executed_steps(), trace.oracle_calls, dist);
}

void run_navigate(const NavigateFlags& f) {
  Manifest manifest("navigate");
  const Checkpoint ckpt = load_checkpoint(f.checkpoint);
  auto oracle = open_oracle(f.oracle);
  check_dims(ckpt.map, *oracle);
  warn_oracle_mismatch(ckpt, *oracle);
  const NavConfig cfg = to_config(f.nav);
  const Vector z0 = resolve_z0(f.target, oracle->latent_dim(), f.oracle.seed);
  const Vector c1 = resolve_c1(f.target, *oracle, z0);

  manifest.config() = oracle_json(f.oracle);
  manifest.config()["nav"] = nav_json(cfg);
  manifest.config()["z0"] = z0;
  manifest.config()["c1"] = c1;
  manifest.seed("seed", f.oracle.seed);
  manifest.input(f.checkpoint);

  NavTrace trace;
  try {
    trace = navigate(ckpt.map, *oracle, z0, c1, cfg);
  } catch (const NavigationDiverged& e) {
    write_json(partial_path(f.out), to_json(e.partial_trace()));
    throw;
  }
  write_json(f.out, to_json(trace));
  manifest.output(f.out);
  manifest.oracle_calls(oracle->call_count());
  manifest.write(f.out);
  print_trace_summary(trace);
}

// --- evaluate -------------------------------------------------------------

struct EvaluateFlags {
  OracleFlags oracle;
  NavFlags nav;
  std::string checkpoint;
  std::string strengths = "5,10,15,20,25,30";
  std::size_t samples = 100;
  std::size_t attr = 0;
  double target = 1.0;
  std::size_t jobs = 1;
  std::string out;
  std::string summary;
};

std::vector<std::size_t> parse_strengths(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || v <= 0) throw InvalidArgument("bad strength '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

void run_evaluate(const EvaluateFlags& f) {
  Manifest manifest("evaluate");
  const Checkpoint ckpt = load_checkpoint(f.checkpoint);
  auto oracle = open_oracle(f.oracle);
  check_dims(ckpt.map, *oracle);
  warn_oracle_mismatch(ckpt, *oracle);

  EvalConfig cfg;
  cfg.strengths = parse_strengths(f.strengths);
  cfg.samples = f.samples;
  cfg.attr = f.attr;
  cfg.target = f.target;
  cfg.nav = to_config(f.nav);
  cfg.seed = derive_seed(f.oracle.seed, kStartStream);
  cfg.jobs = f.jobs;

  const EvalResult result = evaluate(ckpt.map, *oracle, cfg);
  const std::filesystem::path summary_path = f.summary.empty() ? sibling(f.out, ".summary.json") : std::filesystem::path(f.summary);
  write_mdc_csv(result.curve, f.out);
  write_json(summary_path, to_json(result));

  manifest.config() = oracle_json(f.oracle);
  manifest.config()["nav"] = nav_json(cfg.nav);
  manifest.config()["strengths"] = cfg.strengths;
  manifest.config()["samples"] = cfg.samples;
  manifest.config()["attr"] = cfg.attr;
  manifest.config()["target"] = cfg.target;
  manifest.config()["jobs"] = f.jobs;
  manifest.seed("seed", f.oracle.seed);
  manifest.input(f.checkpoint);
  manifest.output(f.out);
  manifest.output(summary_path);
  manifest.oracle_calls(result.oracle_calls);
  manifest.write(f.out);

  std::printf("strength,accuracy,disentanglement,harmonic_mean,accumulated_mds\n");
  for (std::size_t i = 0; i < result.curve.points.size(); ++i) {
    const auto& p = result.curve.points[i];
    std::printf("%g,%.4f,%.4f,%.4f,%.4f\n", p.strength, p.accuracy, p.disentanglement,
                harmonic_mean(p.accuracy, p.disentanglement), result.accumulated[i]);
  }
  const auto& best = result.curve.points[result.best];
  std::printf("mds %.4f\nbest_strength %g (harmonic mean %.4f)\nerrors %zu\n", result.mds, best.strength,
              harmonic_mean(best.accuracy, best.disentanglement), result.errors);
}

// --- mds ------------------------------------------------------------------

struct MdsFlags {
  std::string in;
};

void run_mds(const MdsFlags& f) {
  const MdcCurve curve = read_mdc_csv(f.in);
  const auto acc = accumulated_mds(curve);
  std::printf("strength,accumulated_mds,harmonic_mean\n");
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const auto& p = curve.points[i];
    std::printf("%g,%.3f,%.3f\n", p.strength, acc[i], harmonic_mean(p.accuracy, p.disentanglement));
  }
  std::printf("best_strength %g\nmds %.3f\n", curve.points[select_best_strength(curve)].strength, mds(curve));
}

// --- baseline -------------------------------------------------------------

struct BaselineFlags {
  OracleFlags oracle;
  TargetFlags target;
  LatentOptConfig opt;
  std::string out;
};

void run_baseline(const BaselineFlags& f) {
  Manifest manifest("baseline");
  auto oracle = open_oracle(f.oracle);
  const Vector z0 = resolve_z0(f.target, oracle->latent_dim(), f.oracle.seed);
  const Vector c1 = resolve_c1(f.target, *oracle, z0);
  const OptTrace trace = latent_opt(*oracle, z0, c1, f.opt);
  write_json(f.out, to_json(trace));

  manifest.config() = oracle_json(f.oracle);
  manifest.config()["lr"] = f.opt.lr;
  manifest.config()["iterations"] = f.opt.iterations;
  manifest.config()["tol"] = f.opt.tol;
  manifest.config()["z0"] = z0;
  manifest.config()["c1"] = c1;
  manifest.seed("seed", f.oracle.seed);
  manifest.output(f.out);
  manifest.oracle_calls(oracle->call_count());
  manifest.write(f.out);
  std::printf("converged %s\niterations %zu\nfinal_loss %.6g\n", trace.converged ? "true" : "false",
              trace.records.back().iteration, trace.final_loss);
}

// --- compare-linear -------------------------------------------------------

struct CompareFlags {
  NavigateFlags navigate;
  std::string trace;
};

void run_compare_linear(const CompareFlags& f) {
  NavTrace trace;
  if (!f.trace.empty()) {
    try {
      trace = trace_from_json(nlohmann::json::parse(read_file(f.trace)));
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(std::string("malformed trace: ") + e.what());
    }
  } else {
    if (f.navigate.checkpoint.empty()) throw InvalidArgument("give --trace or --checkpoint");
    const Checkpoint ckpt = load_checkpoint(f.navigate.checkpoint);
    auto oracle = open_oracle(f.navigate.oracle);
    check_dims(ckpt.map, *oracle);
    const Vector z0 = resolve_z0(f.navigate.target, oracle->latent_dim(), f.navigate.oracle.seed);
    const Vector c1 = resolve_c1(f.navigate.target, *oracle, z0);
    trace = navigate(ckpt.map, *oracle, z0, c1, to_config(f.navigate.nav));
    if (!f.navigate.out.empty()) write_json(f.navigate.out, to_json(trace));
  }
  if (trace.steps.empty()) throw InvalidArgument("trace has no steps");
  const Vector& start = trace.steps.front().z;
  const Vector& end = trace.final_z();
  std::printf("deviation %.6g\nsteps %zu\nstart %s\nsgf_end %s\nlinear_end %s\n", path_deviation(trace),
              trace.executed_steps(), format_vector(start).c_str(), format_vector(end).c_str(),
              format_vector(linear_path(start, end, 1.0)).c_str());
}

}  // namespace

std::vector<Command> register_commands(CLI::App& app) {
  std::vector<Command> out;

  {
    auto f = std::make_shared<GenDataFlags>();
    auto* sub = app.add_subcommand("gen-data", "Sample (z, c) pairs from an oracle into an SGFD file");
    add_oracle_flags(*sub, f->oracle);
    sub->add_option("--count", f->count, "Number of pairs")->capture_default_str();
    sub->add_option("--out", f->out, "Output dataset path")->required();
    out.push_back({sub, [f] { run_gen_data(*f); }});
  }
  {
    auto f = std::make_shared<TrainFlags>();
    auto* sub = app.add_subcommand("train", "Train the auxiliary mapping on a dataset");
    sub->add_option("--data", f->data, "SGFD dataset")->required();
    sub->add_option("--out", f->out, "Output checkpoint path")->required();
    sub->add_option("--report", f->report, "Training report JSON (default <out>.report.json)");
    sub->add_option("--seed", f->seed, "Training seed")->capture_default_str();
    sub->add_option("--iterations", f->iterations, "Adam updates")->capture_default_str();
    sub->add_option("--batch", f->batch, "Batch size")->capture_default_str();
    sub->add_option("--lr", f->lr, "Learning rate")->capture_default_str();
    sub->add_option("--blocks", f->blocks, "Conditional blocks N")->capture_default_str();
    sub->add_option("--hidden", f->hidden, "Hidden width")->capture_default_str();
    sub->add_option("--sn-steps", f->sn_steps, "Power steps per update")->capture_default_str();
    sub->add_option("--diag-interval", f->diag_interval, "Iterations between report records")
        ->capture_default_str();
    out.push_back({sub, [f] { run_train(*f); }});
  }
  {
    auto f = std::make_shared<NavigateFlags>();
    auto* sub = app.add_subcommand("navigate", "Steer a latent toward a target condition");
    add_oracle_flags(*sub, f->oracle);
    add_nav_flags(*sub, f->nav);
    add_target_flags(*sub, f->target);
    sub->add_option("--checkpoint", f->checkpoint, "SGFC checkpoint")->required();
    sub->add_option("--out", f->out, "Output trace JSON")->required();
    out.push_back({sub, [f] { run_navigate(*f); }});
  }
  {
    auto f = std::make_shared<EvaluateFlags>();
    auto* sub = app.add_subcommand("evaluate", "Sweep navigation strength and write the MDC curve");
    add_oracle_flags(*sub, f->oracle);
    add_nav_flags(*sub, f->nav);
    sub->add_option("--checkpoint", f->checkpoint, "SGFC checkpoint")->required();
    sub->add_option("--strengths", f->strengths, "Comma-separated max-step budgets")->capture_default_str();
    sub->add_option("--samples", f->samples, "Samples per strength")->capture_default_str();
    sub->add_option("--attr", f->attr, "Attribute to edit")->capture_default_str();
    sub->add_option("--target", f->target, "Requested binary target (0 or 1)")->capture_default_str();
    sub->add_option("--jobs", f->jobs, "Concurrent navigations")->capture_default_str();
    sub->add_option("--out", f->out, "Output MDC CSV")->required();
    sub->add_option("--summary", f->summary, "Summary JSON (default <out>.summary.json)");
    out.push_back({sub, [f] { run_evaluate(*f); }});
  }
  {
    auto f = std::make_shared<MdsFlags>();
    auto* sub = app.add_subcommand("mds", "Score an MDC CSV");
    sub->add_option("csv", f->in, "MDC CSV (strength,accuracy,disentanglement)")->required();
    out.push_back({sub, [f] { run_mds(*f); }});
  }
  {
    auto f = std::make_shared<BaselineFlags>();
    auto* sub = app.add_subcommand("baseline", "Optimise the latent directly through the oracle gradient");
    add_oracle_flags(*sub, f->oracle);
    add_target_flags(*sub, f->target);
    sub->add_option("--lr", f->opt.lr, "Adam learning rate")->capture_default_str();
    sub->add_option("--iterations", f->opt.iterations, "Iteration budget")->capture_default_str();
    sub->add_option("--tol", f->opt.tol, "Stop when the loss reaches this")->capture_default_str();
    sub->add_option("--out", f->out, "Output trace JSON")->required();
    out.push_back({sub, [f] { run_baseline(*f); }});
  }
  {
    auto f = std::make_shared<CompareFlags>();
    auto* sub = app.add_subcommand("compare-linear", "Compare a navigation path with its straight chord");
    add_oracle_flags(*sub, f->navigate.oracle);
    add_nav_flags(*sub, f->navigate.nav);
    add_target_flags(*sub, f->navigate.target);
    sub->add_option("--trace", f->trace, "Existing trace JSON (otherwise navigate first)");
    sub->add_option("--checkpoint", f->navigate.checkpoint, "SGFC checkpoint");
    sub->add_option("--out", f->navigate.out, "Where to write the trace when navigating");
    out.push_back({sub, [f] { run_compare_linear(*f); }});
  }
  return out;
}

}  // namespace sgf::cli
