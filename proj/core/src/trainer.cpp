// SPDX-License-Identifier: Apache-2.0
#include "sgf/trainer.hpp"

#include <cmath>
#include <fstream>

#include "binary_io.hpp"
#include "sgf/errors.hpp"
#include "sgf/io.hpp"

namespace sgf {

namespace {

constexpr char kDatasetMagic[4] = {'S', 'G', 'F', 'D'};
constexpr std::uint32_t kDatasetVersion = 1;

struct Probe {
  std::vector<const Pair*> points;
  std::vector<Vector> directions;  // one unit direction in C per point
};

Probe make_probe(std::span<const Pair> heldout, std::size_t count, std::size_t n_c, std::uint64_t seed) {
  Probe probe;
  Rng rng(seed);
  const std::size_t n = std::min(count, heldout.size());
  for (std::size_t i = 0; i < n; ++i) {
    probe.points.push_back(&heldout[i]);
    probe.directions.push_back(sample_unit(rng, n_c));
  }
  return probe;
}

void run_probe(const AuxMap& f, const Probe& probe, TrainRecord& record) {
  if (probe.points.empty()) return;
  double jvp_sum = 0.0;
  double radius_sum = 0.0;
  for (std::size_t i = 0; i < probe.points.size(); ++i) {
    const Pair& p = *probe.points[i];
    jvp_sum += norm2(f.jvp_c(p.z, p.c, probe.directions[i]));
    radius_sum += spectral_radius_z(f, p.z, p.c, 50);
  }
  const auto n = static_cast<double>(probe.points.size());
  record.probe_jvp_c = jvp_sum / n;
  record.spectral_radius = radius_sum / n;
}

double relative_error(const AuxiliaryMapping& f, std::span<const Pair> pairs) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : pairs) {
    const double zn = norm2(p.z);
    const double err = norm2(subtract(f.forward(p.z, p.c), p.z));
    sum += zn > 0.0 ? err / zn : err;
  }
  return sum / static_cast<double>(pairs.size());
}

}  // namespace

// --- dataset --------------------------------------------------------------

PairDataset build_dataset(Oracle& oracle, std::size_t count, Rng& rng, std::size_t batch) {
  if (count == 0) throw InvalidArgument("build_dataset: count must be >= 1");
  if (batch == 0) batch = 1;
  PairDataset data;
  data.d = oracle.latent_dim();
  data.n_c = oracle.cond_dim();
  data.seed = rng.seed();
  data.oracle_digest = oracle.digest();
  data.pairs.reserve(count);

  std::vector<Vector> zs;
  while (data.pairs.size() < count) {
    zs.clear();
    const std::size_t n = std::min(batch, count - data.pairs.size());
    for (std::size_t i = 0; i < n; ++i) zs.push_back(sample_gaussian(rng, data.d));
    auto cs = oracle.eval_batch(zs);
    for (std::size_t i = 0; i < n; ++i) data.pairs.push_back(Pair{std::move(zs[i]), std::move(cs[i])});
  }
  return data;
}

void save_dataset(const PairDataset& data, const std::filesystem::path& path) {
  atomic_write(path, [&data](std::ostream& out) {
    out.write(kDatasetMagic, 4);
    detail::write_le<std::uint32_t>(out, kDatasetVersion);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.d));
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.n_c));
    detail::write_le<std::uint64_t>(out, data.pairs.size());
    out.write(reinterpret_cast<const char*>(data.oracle_digest.data()), 32);
    for (const auto& p : data.pairs) {
      if (p.z.size() != data.d || p.c.size() != data.n_c) {
        throw InvalidArgument("save_dataset: pair with wrong dimensions");
      }
      detail::write_doubles(out, p.z);
      detail::write_doubles(out, p.c);
    }
  });
}

PairDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_dataset: cannot open '" + path.string() + "'");
  char magic[4];
  std::uint32_t version = 0, d = 0, n_c = 0;
  std::uint64_t count = 0;
  PairDataset data;
  if (!in.read(magic, 4) || std::memcmp(magic, kDatasetMagic, 4) != 0) {
    throw CorruptCheckpoint("load_dataset: bad magic in '" + path.string() + "'");
  }
  if (!detail::read_le(in, version) || version != kDatasetVersion) {
    throw CorruptCheckpoint("load_dataset: unsupported version");
  }
  if (!detail::read_le(in, d) || !detail::read_le(in, n_c) || !detail::read_le(in, count) ||
      !in.read(reinterpret_cast<char*>(data.oracle_digest.data()), 32)) {
    throw CorruptCheckpoint("load_dataset: truncated header");
  }
  if (d == 0 || n_c == 0) throw CorruptCheckpoint("load_dataset: zero dimension");
  data.d = d;
  data.n_c = n_c;
  data.pairs.resize(count);
  for (auto& p : data.pairs) {
    p.z.resize(d);
    p.c.resize(n_c);
    if (!detail::read_doubles(in, p.z) || !detail::read_doubles(in, p.c)) {
      throw CorruptCheckpoint("load_dataset: truncated body");
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw CorruptCheckpoint("load_dataset: trailing bytes");
  return data;
}

// --- loss -----------------------------------------------------------------

double mse_loss(const AuxiliaryMapping& f, std::span<const Pair> batch) {
  if (batch.empty()) throw InvalidArgument("mse_loss: empty batch");
  double total = 0.0;
  for (const auto& p : batch) {
    const Vector r = subtract(f.forward(p.z, p.c), p.z);
    total += dot(r, r);
  }
  return total / static_cast<double>(batch.size());
}

// --- training -------------------------------------------------------------

void TrainConfig::validate() const {
  if (iterations == 0 || batch_size == 0 || diag_interval == 0) {
    throw InvalidArgument("TrainConfig: counts must be >= 1");
  }
  if (!(lr > 0.0)) throw InvalidArgument("TrainConfig: lr must be positive");
  if (!(heldout_fraction >= 0.0 && heldout_fraction < 1.0)) {
    throw InvalidArgument("TrainConfig: heldout_fraction must lie in [0, 1)");
  }
}

TrainingDiverged::TrainingDiverged(std::size_t last_finite_iteration, TrainReport partial)
    : std::runtime_error("training diverged: non-finite loss after iteration " +
                         std::to_string(last_finite_iteration)),
      last_finite_(last_finite_iteration),
      partial_(std::move(partial)) {}

std::span<const Pair> heldout_split(const PairDataset& data, double fraction) {
  const std::size_t n = data.pairs.size();
  auto held = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  if (held >= n) held = n > 1 ? n - 1 : 0;
  return std::span<const Pair>(data.pairs).subspan(n - held);
}

std::span<const Pair> training_split(const PairDataset& data, double fraction) {
  const auto held = heldout_split(data, fraction).size();
  return std::span<const Pair>(data.pairs).first(data.pairs.size() - held);
}

TrainResult train(const PairDataset& data, const ArchConfig& arch, const TrainConfig& cfg) {
  arch.validate();
  cfg.validate();
  if (data.d != arch.latent_dim || data.n_c != arch.cond_dim) {
    throw InvalidArgument("train: dataset dimensions do not match the architecture");
  }
  if (data.pairs.empty()) throw InvalidArgument("train: empty dataset");

  const auto train_set = training_split(data, cfg.heldout_fraction);
  const auto heldout = heldout_split(data, cfg.heldout_fraction);
  // Loss reporting falls back to the training split when nothing is held out.
  const auto eval_set = heldout.empty() ? train_set : heldout;

  Rng rng(cfg.seed);
  AuxMap f = AuxMap::init(arch, rng);
  const Probe probe = make_probe(eval_set, cfg.probe_points, arch.cond_dim, derive_seed(cfg.seed, 1));

  TrainReport report;
  report.heldout_count = heldout.size();
  report.initial_heldout_loss = mse_loss(f, eval_set);

  auto params = f.parameters();
  std::vector<AdamState> adam;
  adam.reserve(params.size());
  for (const auto& p : params) adam.emplace_back(p.size(), AdamHyperParams{cfg.lr});

  const double inv_batch = 1.0 / static_cast<double>(cfg.batch_size);
  double interval_loss = 0.0;
  std::size_t interval_count = 0;

  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    f.spectral_normalize(cfg.sn_power_steps_per_update);
    ParamGrads grads = f.zero_grads();
    double batch_loss = 0.0;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const Pair& p = train_set[rng.below(train_set.size())];
      f.forward_backward(
          p.z, p.c,
          [&](ConstSpan out) {
            Vector g(out.size());
            for (std::size_t k = 0; k < out.size(); ++k) {
              const double r = out[k] - p.z[k];
              batch_loss += r * r;
              g[k] = 2.0 * r * inv_batch;
            }
            return g;
          },
          grads);
    }
    batch_loss *= inv_batch;
    if (!std::isfinite(batch_loss)) throw TrainingDiverged(it - 1, std::move(report));

    params = f.parameters();
    auto grad_tensors = grads.tensors();
    for (std::size_t t = 0; t < params.size(); ++t) adam[t].step(params[t], grad_tensors[t]);

    interval_loss += batch_loss;
    ++interval_count;
    if (it % cfg.diag_interval == 0 || it == cfg.iterations) {
      TrainRecord record;
      record.iteration = it;
      record.loss = interval_loss / static_cast<double>(interval_count);
      run_probe(f, probe, record);
      report.records.push_back(record);
      interval_loss = 0.0;
      interval_count = 0;
    }
  }

  // Bring the cached sigmas in line with the weights after the last update.
  f.spectral_normalize(cfg.sn_power_steps_per_update);
  report.final_heldout_loss = mse_loss(f, eval_set);
  if (!std::isfinite(report.final_heldout_loss)) throw TrainingDiverged(cfg.iterations, std::move(report));
  report.final_heldout_relative_error = relative_error(f, eval_set);
  report.degenerate = !report.records.empty() && report.records.back().probe_jvp_c < TrainReport::kDegenerateProbe;
  return TrainResult{std::move(f), std::move(report)};
}

nlohmann::json to_json(const TrainReport& report) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : report.records) {
    records.push_back({{"iteration", r.iteration},
                       {"loss", r.loss},
                       {"probe_jvp_c", r.probe_jvp_c},
                       {"spectral_radius", r.spectral_radius}});
  }
  return {{"records", records},
          {"initial_heldout_loss", report.initial_heldout_loss},
          {"final_heldout_loss", report.final_heldout_loss},
          {"final_heldout_relative_error", report.final_heldout_relative_error},
          {"heldout_count", report.heldout_count},
          {"degenerate", report.degenerate}};
}

}  // namespace sgf
