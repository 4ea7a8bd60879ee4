// SPDX-License-Identifier: Apache-2.0
//
// Acceptance runner: one PASS/FAIL line per criterion, each with its
// measured runtime and the numbers it was judged on. The exit status is
// non-zero when any criterion fails.
#include <openssl/evp.h>
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "gender_table.hpp"
#include "rig.hpp"
#include "sgf/baselines.hpp"
#include "sgf/io.hpp"
#include "sgf/metrics.hpp"

namespace fs = std::filesystem;
using namespace sgf;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel_err(const Vector& got, const Vector& want) {
  return norm2(subtract(got, want)) / std::max(norm2(want), 1e-300);
}

// --- 1: published table arithmetic ---------------------------------------

Verdict table_arithmetic() {
  double worst = 0.0;
  for (const auto* rows : {&testing::kSgfRows, &testing::kInterfaceGanRows}) {
    const auto acc = accumulated_mds(testing::curve_of(*rows));
    for (std::size_t i = 0; i < rows->size(); ++i) {
      const auto& r = (*rows)[i];
      worst = std::max(worst, std::abs(acc[i] - r.accumulated));
      worst = std::max(worst, std::abs(harmonic_mean(r.accuracy, r.disentanglement) - r.harmonic));
    }
  }
  const MdcCurve sgf_curve = testing::curve_of(testing::kSgfRows);
  const MdcCurve igan_curve = testing::curve_of(testing::kInterfaceGanRows);
  const double sgf_final = mds(sgf_curve);
  const double igan_final = mds(igan_curve);
  const auto& sb = testing::kSgfRows[select_best_strength(sgf_curve)];
  const auto& ib = testing::kInterfaceGanRows[select_best_strength(igan_curve)];
  const double sgf_best = harmonic_mean(sb.accuracy, sb.disentanglement);
  const double igan_best = harmonic_mean(ib.accuracy, ib.disentanglement);
  const bool ok = worst <= 0.002 && std::abs(sgf_final - testing::kSgfFinalMds) <= 0.002 &&
                  std::abs(igan_final - testing::kInterfaceGanFinalMds) <= 0.002 &&
                  std::abs(sgf_best - testing::kSgfBestHarmonic) <= 0.002 &&
                  std::abs(igan_best - testing::kInterfaceGanBestHarmonic) <= 0.002;
  return {ok, fmt("26 columns max |err| %.4f; final %.3f / %.3f; best harmonic %.3f / %.3f", worst, sgf_final,
                  igan_final, sgf_best, igan_best)};
}

// --- 2: linear world ------------------------------------------------------

Verdict linear_world() {
  const AffineAuxMap f(Matrix::from_rows({{0.5}}), Matrix::from_rows({{0.25}}), Vector{0.0});
  auto phi = build_oracle(OracleSpec::parse("linear:d=1,nc=1,gain=2"));
  bool exact_ok = true;
  std::string detail = "exact steps";
  for (double lambda : {0.1, 0.2, 0.5}) {
    NavConfig cfg;
    cfg.step_size = lambda;
    cfg.inverse = InverseMode::kExact;
    cfg.converge_tol = 1e-9;
    const NavTrace t = navigate(f, *phi, Vector{0.0}, Vector{2.0}, cfg);
    const auto want = static_cast<std::size_t>(std::ceil(1.0 / lambda));
    exact_ok = exact_ok && t.converged && t.executed_steps() == want;
    detail += fmt(" %zu/%zu", t.executed_steps(), want);
  }
  bool neumann_ok = true;
  detail += "; neumann m=1 best |c-c1|";
  for (double lambda : {0.1, 0.2, 0.5}) {
    NavConfig cfg;
    cfg.step_size = lambda;
    cfg.neumann_order = 1;
    cfg.converge_tol = 1e-3;
    const NavTrace t = navigate(f, *phi, Vector{0.0}, Vector{2.0}, cfg);
    double best = INFINITY;
    for (const auto& s : t.steps) best = std::min(best, s.dist);
    neumann_ok = neumann_ok && t.converged;
    detail += fmt(" %.3g@%g", best, lambda);
  }
  detail += neumann_ok ? "" : " (needs <= 1e-3; a constant-dc first-order step never lands there)";
  return {exact_ok && neumann_ok, detail};
}

// --- 3: truncated series vs exact solve ---------------------------------

Verdict neumann_bound(const AuxMap& f, Oracle& oracle) {
  std::size_t found = 0;
  std::size_t scanned = 0;
  double worst_ratio = 0.0;
  double max_rho = 0.0;
  bool ok = true;
  for (std::size_t i = 0; found < 20 && i < 5000; ++i, ++scanned) {
    Rng rng(derive_seed(3000, i));
    Vector z = sample_gaussian(rng, f.latent_dim());
    for (double& v : z) v *= 2.0;
    const Vector c = oracle.eval(z);
    const double rho = spectral_radius_z(f, z, c);
    if (!(rho < 0.95)) continue;
    ++found;
    max_rho = std::max(max_rho, rho);
    const Vector target = testing::single_attribute_target(c, i);
    const Vector dc = scaled(subtract(target, c), 0.2);
    const Vector v0 = f.jvp_c(z, c, dc);
    Matrix a = jacobian_z(f, z, c);
    for (double& v : a.values()) v = -v;
    for (std::size_t k = 0; k < a.rows(); ++k) a(k, k) += 1.0;
    const Vector exact = LuDecomposition(a).solve(v0);
    const LinearOperator apply = [&](ConstSpan x) { return f.jvp_z(z, c, x); };
    for (std::size_t m : {1u, 5u, 20u}) {
      const double err = norm2(subtract(neumann_apply(apply, v0, m), exact));
      const double bound = 1.1 * std::pow(rho, static_cast<double>(m + 1)) / (1.0 - rho) * norm2(v0);
      worst_ratio = std::max(worst_ratio, err / bound);
      ok = ok && err <= bound;
    }
  }
  ok = ok && found == 20;
  return {ok, fmt("%zu points (scanned %zu at 2x prior scale), max rho %.3f, worst err/bound %.3f", found, scanned,
                  max_rho, worst_ratio)};
}

// --- 4: derivatives vs central differences ------------------------------

AuxMap random_map(Rng& rng) {
  ArchConfig arch;
  arch.latent_dim = 2 + rng.below(5);
  arch.cond_dim = 1 + rng.below(4);
  arch.n_blocks = 1 + rng.below(3);
  // Two hidden units normalise to (+-1, -+1) whatever z is, so the
  // z-derivative is identically zero there and a relative error means
  // nothing; start at three.
  arch.hidden = 3 + rng.below(6);
  AuxMap f = AuxMap::init(arch, rng);
  for (auto t : f.parameters()) {
    for (double& v : t) v += 0.3 * rng.gaussian();
  }
  f.spectral_normalize(50);
  return f;
}

Verdict derivatives() {
  double jvp_worst = 0.0;
  double grad_worst = 0.0;
  double oracle_worst = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    Rng rng(derive_seed(4000, i));
    AuxMap f = random_map(rng);
    const std::size_t d = f.latent_dim();
    const std::size_t nc = f.cond_dim();
    const Vector z = sample_gaussian(rng, d);
    const Vector c = sample_gaussian(rng, nc);
    const Vector dz = sample_gaussian(rng, d);
    const Vector dc = sample_gaussian(rng, nc);
    jvp_worst = std::max(jvp_worst, rel_err(f.jvp_z(z, c, dz),
                                            finite_diff_jvp([&](ConstSpan x) { return f.forward(x, c); }, z, dz)));
    jvp_worst = std::max(jvp_worst, rel_err(f.jvp_c(z, c, dc),
                                            finite_diff_jvp([&](ConstSpan x) { return f.forward(z, x); }, c, dc)));

    const Vector g = sample_gaussian(rng, d);
    ParamGrads grads = f.backward(z, c, g);
    Vector analytic;
    Vector numeric;
    const double h = 1e-6;
    auto params = f.parameters();
    auto tensors = grads.tensors();
    for (std::size_t t = 0; t < params.size(); ++t) {
      for (std::size_t k = 0; k < params[t].size(); ++k) {
        const double saved = params[t][k];
        params[t][k] = saved + h;
        const double up = dot(f.forward(z, c), g);
        params[t][k] = saved - h;
        const double down = dot(f.forward(z, c), g);
        params[t][k] = saved;
        analytic.push_back(tensors[t][k]);
        numeric.push_back((up - down) / (2 * h));
      }
    }
    grad_worst = std::max(grad_worst, rel_err(analytic, numeric));

    const std::size_t od = 1 + rng.below(6);
    const std::size_t onc = 1 + rng.below(4);
    const std::string dims = fmt("d=%zu,nc=%zu,seed=%llu", od, onc, static_cast<unsigned long long>(i + 1));
    const std::string kp = fmt("d=%zu,nc=%zu,seed=%llu", od, 2 * onc, static_cast<unsigned long long>(i + 1));
    for (const std::string& spec : {"linear:" + dims + ",random=1", "sigmoid-attrs:" + dims,
                                    "tanh-mix:" + dims, "keypoint-bumps:" + kp}) {
      auto o = build_oracle(OracleSpec::parse(spec));
      const Vector x = sample_gaussian(rng, od);
      const Matrix jac = o->eval_grad(x);
      for (std::size_t k = 0; k < od; ++k) {
        Vector e(od, 0.0);
        e[k] = 1.0;
        const Vector fd = finite_diff_jvp([&](ConstSpan y) { return o->eval(y); }, x, e);
        // A column that is exactly zero analytically (bumps far from
        // every centre) is compared absolutely.
        const double err = norm2(fd) > 1e-12 ? rel_err(jac.column(k), fd) : norm2(jac.column(k));
        oracle_worst = std::max(oracle_worst, err);
      }
    }
  }
  const bool ok = jvp_worst <= 1e-5 && grad_worst <= 1e-4 && oracle_worst <= 1e-5;
  return {ok, fmt("worst relative error: jvp %.2e, parameter grads %.2e, oracle jacobians %.2e", jvp_worst,
                  grad_worst, oracle_worst)};
}

// --- 5 and 6: trained rig -----------------------------------------------

struct RigRun {
  std::size_t converged = 0;
  double mean_dist = 0.0;
};

RigRun run_rig(const AuxMap& f, Oracle& oracle, double lambda) {
  RigRun r;
  for (std::size_t i = 0; i < 100; ++i) {
    const Vector z0 = testing::rig_start(i);
    const Vector c1 = testing::single_attribute_target(oracle.eval(z0), i);
    NavConfig cfg;
    cfg.step_size = lambda;
    cfg.neumann_order = 1;
    cfg.max_steps = 50;
    try {
      const NavTrace t = navigate(f, oracle, z0, c1, cfg);
      r.converged += t.converged ? 1 : 0;
      r.mean_dist += t.steps.back().dist;
    } catch (const NavigationDiverged& e) {
      r.mean_dist += e.partial_trace().steps.back().dist;
    }
  }
  r.mean_dist /= 100.0;
  return r;
}

// --- 7: oracle call contract ----------------------------------------------

Verdict fast_contract(const AuxMap& f, Oracle& oracle) {
  bool ok = true;
  std::string detail = "calls fast/fast+check/standard:";
  for (std::size_t n : {1u, 5u, 20u, 50u}) {
    const Vector z0 = testing::rig_start(n);
    const Vector c1 = testing::single_attribute_target(oracle.eval(z0), n);
    // Fast mode stops once the predicted c reaches c1, after ceil(1 / lambda)
    // steps, so lambda = 1 / n makes it run the whole budget.
    NavConfig cfg;
    cfg.step_size = 1.0 / static_cast<double>(n);
    cfg.max_steps = n;
    cfg.converge_tol = 1e-12;
    auto count = [&](const NavConfig& c, NavTrace* out) {
      const std::uint64_t before = oracle.call_count();
      *out = navigate(f, oracle, z0, c1, c);
      const std::uint64_t used = oracle.call_count() - before;
      ok = ok && used == out->oracle_calls;
      return used;
    };
    NavTrace fast;
    NavTrace checked;
    NavTrace standard;
    cfg.fast = true;
    const auto a = count(cfg, &fast);
    cfg.final_check = true;
    const auto b = count(cfg, &checked);
    cfg.fast = false;
    cfg.final_check = false;
    const auto s = count(cfg, &standard);
    ok = ok && a == 1 && b == 2 && s == 1 + standard.executed_steps() && fast.executed_steps() >= n - 1;
    ok = ok && fast.steps.size() > 1 && standard.steps.size() > 1 && fast.steps[1].z == standard.steps[1].z &&
         fast.steps[1].dz == standard.steps[1].dz;
    detail += fmt(" %zu steps %llu/%llu/%llu", fast.executed_steps(), static_cast<unsigned long long>(a),
                  static_cast<unsigned long long>(b), static_cast<unsigned long long>(s));
  }
  return {ok, detail + "; first steps identical"};
}

// --- 8: direct optimisation baseline ------------------------------------

Verdict baseline_sanity() {
  auto linear = build_oracle(OracleSpec::parse("linear:d=1,nc=1,gain=2"));
  const OptTrace lin = latent_opt(*linear, Vector{0.0}, Vector{2.0});

  // Pinned instance: tanh-mix world, rig-style training, start 296 of the
  // seed-5000 stream with attribute 0 flipped.
  auto tanh = build_oracle(OracleSpec::parse("tanh-mix:gain=2,scale=2,width=8", 16, 4, 7));
  Rng data_rng(derive_seed(7, 1));
  const PairDataset data = build_dataset(*tanh, 50000, data_rng);
  ArchConfig arch;
  arch.latent_dim = 16;
  arch.cond_dim = 4;
  TrainConfig tc;
  tc.seed = 7;
  const TrainResult trained = train(data, arch, tc);
  Rng start_rng(derive_seed(5000, 296));
  const Vector z0 = sample_gaussian(start_rng, 16);
  const Vector c0 = tanh->eval(z0);
  Vector c1 = c0;
  c1[0] = c0[0] < 0.5 ? 0.8 : 0.2;
  const OptTrace stalled = latent_opt(*tanh, z0, c1);
  NavConfig cfg;
  cfg.step_size = 1.0;
  cfg.neumann_order = 1;
  cfg.inverse = InverseMode::kExact;
  const NavTrace nav = navigate(trained.map, *tanh, z0, c1, cfg);
  const bool ok = lin.final_loss < 1e-6 && stalled.final_loss > 0.1 && nav.converged;
  return {ok, fmt("linear loss %.2e; tanh-mix latent_opt loss %.3f, navigation %s in %zu steps", lin.final_loss,
                  stalled.final_loss, nav.converged ? "converged" : "did not converge", nav.executed_steps())};
}

// --- 9: CLI determinism and formats -------------------------------------

std::string sha256_hex(const std::string& bytes) {
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), out, &len, EVP_sha256(), nullptr);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt("%02x", out[i]);
  return hex;
}

int run_cli(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" + SGF_CLI + "' " + args + " > stdout.txt 2> stderr.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict cli_determinism() {
  if (std::string(SGF_CLI).empty()) return {false, "CLI not built"};
  const fs::path root = fs::temp_directory_path() / "sgf_acceptance_cli";
  fs::remove_all(root);
  const std::string small = "--oracle sigmoid-attrs --d 4 --nc 2 --seed 3";
  const std::string lin = "--oracle linear:gain=2 --d 1 --nc 1 --seed 1";
  // Each command with the files it produces; manifests carry wall-clock
  // durations and are left out of the digest.
  const std::vector<std::pair<std::string, std::vector<std::string>>> commands{
      {"gen-data " + small + " --count 2000 --out d.sgfd", {"d.sgfd"}},
      {"train --data d.sgfd --out f.sgfc --iterations 1500 --seed 3", {"f.sgfc", "f.sgfc.report.json"}},
      {"navigate --checkpoint f.sgfc " + small + " --z0 [0.3,-0.2,0.1,0.5] --c1 [0.8,0.3] --out nav.json",
       {"nav.json"}},
      {"navigate --checkpoint f.sgfc " + small + " --z0 [0.3,-0.2,0.1,0.5] --c1 [0.8,0.3] --fast --out fast.json",
       {"fast.json"}},
      {"evaluate --checkpoint f.sgfc " + small + " --samples 20 --strengths 5,10,15 --out mdc.csv",
       {"mdc.csv", "mdc.csv.summary.json"}},
      {"mds table.csv", {}},
      {"baseline " + lin + " --z0 [0] --c1 [2] --out opt.json", {"opt.json"}},
      {"compare-linear --trace nav.json", {}},
  };
  std::vector<std::vector<std::string>> digests(2);
  std::string mds_line;
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path dir = root / (pass == 0 ? "a" : "b");
    fs::create_directories(dir);
    write_mdc_csv(testing::curve_of(testing::kSgfRows), dir / "table.csv");
    for (const auto& [args, files] : commands) {
      if (run_cli(dir, args) != 0) return {false, "command failed: " + args};
      std::string text = read_file(dir / "stdout.txt");
      // Wall-clock lines are the one legitimately varying part of stdout.
      std::istringstream in(text);
      std::string line;
      std::string kept;
      while (std::getline(in, line)) {
        if (line.find("seconds") == std::string::npos) kept += line + "\n";
        if (args.rfind("mds ", 0) == 0 && line.rfind("mds ", 0) == 0) mds_line = line;
      }
      digests[pass].push_back(sha256_hex(kept));
      for (const auto& file : files) digests[pass].push_back(sha256_hex(read_file(dir / file)));
    }
  }
  const bool same = digests[0] == digests[1];

  const fs::path dir = root / "a";
  const std::string data_bytes = read_file(dir / "d.sgfd");
  save_dataset(load_dataset(dir / "d.sgfd"), dir / "d2.sgfd");
  const bool data_rt = read_file(dir / "d2.sgfd") == data_bytes && load_dataset(dir / "d2.sgfd") ==
                                                                        load_dataset(dir / "d.sgfd");
  const Checkpoint ck = load_checkpoint(dir / "f.sgfc");
  save_checkpoint(ck.map, ck.meta, dir / "f2.sgfc");
  const bool ck_rt = read_file(dir / "f2.sgfc") == read_file(dir / "f.sgfc") &&
                     load_checkpoint(dir / "f2.sgfc").map == ck.map;
  const bool mds_ok = mds_line == "mds 0.919";
  return {same && data_rt && ck_rt && mds_ok,
          fmt("%zu digests %s across reruns; SGFD round trip %s; SGFC round trip %s; '%s'", digests[0].size(),
              same ? "identical" : "DIFFER", data_rt ? "bit-exact" : "differs", ck_rt ? "bit-exact" : "differs",
              mds_line.c_str())};
}

// --- runner ----------------------------------------------------------------

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  // The rig is trained once and shared by criteria 3, 5, 6 and 7. Its
  // training time counts toward criterion 5, whose budget includes it.
  const auto t0 = std::chrono::steady_clock::now();
  auto oracle = testing::rig_oracle();
  const PairDataset data = testing::rig_dataset(*oracle);
  const AuxMap rig = train(data, ArchConfig{}, testing::rig_train_config()).map;
  const double rig_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("rig trained in %.1fs\n", rig_seconds);

  const std::vector<Criterion> criteria{
      {1, "mds table reproduction", 1.0, table_arithmetic},
      {2, "linear-world exactness", 1.0, linear_world},
      {3, "neumann/exact equivalence", 10.0, [&] { return neumann_bound(rig, *oracle); }},
      {4, "derivative correctness", 30.0, derivatives},
      {5, "end-to-end navigation", 600.0 - rig_seconds,
       [&] {
         const RigRun r = run_rig(rig, *oracle, 0.2);
         return Verdict{r.converged >= 90, fmt("%zu/100 converged at lambda 0.2, m 1, n 50 (golden 98)", r.converged)};
       }},
      {6, "step-size ablation trend", 900.0 - rig_seconds,
       [&] {
         const RigRun mid = run_rig(rig, *oracle, 0.2);
         const RigRun big = run_rig(rig, *oracle, 1.0);
         const RigRun tiny = run_rig(rig, *oracle, 0.02);
         const bool ok = mid.converged >= big.converged && tiny.mean_dist > mid.mean_dist;
         return Verdict{ok, fmt("converged 0.2: %zu, 1.0: %zu; mean final dist 0.02: %.4f, 0.2: %.4f", mid.converged,
                                big.converged, tiny.mean_dist, mid.mean_dist)};
       }},
      {7, "fast-variant contract", 1.0, [&] { return fast_contract(rig, *oracle); }},
      {8, "baseline sanity", 120.0, baseline_sanity},
      {9, "determinism and formats", 60.0, cli_determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = seconds <= c.budget_seconds;
    const bool pass = v.pass && in_budget;
    if (!pass) ++failures;
    std::printf("criterion %d %s: %s (%.2fs) %s%s\n", c.id, c.name, pass ? "PASS" : "FAIL", seconds,
                v.detail.c_str(), v.pass && !in_budget ? " [over time budget]" : "");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
