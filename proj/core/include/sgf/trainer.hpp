// SPDX-License-Identifier: Apache-2.0
//
// (z, c) pair datasets drawn from an oracle, MSE training of the auxiliary
// mapping, and the on-disk formats for both.
//
// Dataset file (little-endian):
//   "SGFD" | u32 version = 1 | u32 d | u32 n_c | u64 count | 32-byte oracle digest
//   count records of d f64 (z) followed by n_c f64 (c)
//
// Checkpoint file (little-endian):
//   "SGFC" | u32 version = 1 | u32 json_len | json_len bytes of JSON metadata
//   tensors as f64, in this order:
//     for each block: weight (row-major), bias, sn_u, sn_sigma,
//                     gamma_weight, gamma_bias, beta_weight, beta_bias
//     head:           out_weight, out_bias, out_sn_u, out_sn_sigma
//   Shapes follow from the "arch" object in the metadata.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <stdexcept>
#include <vector>

#include "sgf/auxmap.hpp"
#include "sgf/oracle.hpp"

namespace sgf {

struct Pair {
  Vector z;
  Vector c;
  friend bool operator==(const Pair&, const Pair&) = default;
};

struct PairDataset {
  std::size_t d = 0;
  std::size_t n_c = 0;
  std::vector<Pair> pairs;
  std::uint64_t seed = 0;
  Digest oracle_digest{};

  friend bool operator==(const PairDataset&, const PairDataset&) = default;
};

/// z_i ~ N(0, I_d) from `rng`, c_i = oracle.eval(z_i), queried in batches of
/// `batch` so external oracles amortise round trips.
PairDataset build_dataset(Oracle& oracle, std::size_t count, Rng& rng, std::size_t batch = 256);

void save_dataset(const PairDataset& data, const std::filesystem::path& path);
PairDataset load_dataset(const std::filesystem::path& path);

/// Mean over the batch of ||F(z, c) - z||^2.
double mse_loss(const AuxiliaryMapping& f, std::span<const Pair> batch);

struct TrainConfig {
  std::size_t iterations = 20000;
  std::size_t batch_size = 8;
  double lr = 2e-4;
  std::uint64_t seed = 0;
  std::size_t sn_power_steps_per_update = 1;
  std::size_t diag_interval = 1000;
  /// Trailing fraction of the dataset held out from batch sampling.
  double heldout_fraction = 0.05;
  /// Held-out points used for the jvp_c / spectral-radius probes.
  std::size_t probe_points = 8;

  void validate() const;
};

struct TrainRecord {
  std::size_t iteration = 0;
  /// Mean batch loss since the previous record.
  double loss = 0.0;
  /// Mean ||dF/dc * u|| over probe points and unit directions u.
  double probe_jvp_c = 0.0;
  /// Mean power-iteration estimate of ||dF/dz||_op over probe points.
  double spectral_radius = 0.0;
};

struct TrainReport {
  std::vector<TrainRecord> records;
  double initial_heldout_loss = 0.0;
  double final_heldout_loss = 0.0;
  /// Mean of ||F(z, phi(z)) - z|| / ||z|| over the held-out split.
  double final_heldout_relative_error = 0.0;
  std::size_t heldout_count = 0;
  /// Set when the final probe_jvp_c falls below kDegenerateProbe: F has
  /// learned to ignore c.
  bool degenerate = false;

  static constexpr double kDegenerateProbe = 1e-4;
};

nlohmann::json to_json(const TrainReport& report);

struct TrainResult {
  AuxMap map;
  TrainReport report;
};

/// Raised when the loss turns non-finite; carries what was logged so far.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t last_finite_iteration, TrainReport partial);
  std::size_t last_finite_iteration() const noexcept { return last_finite_; }
  const TrainReport& partial_report() const noexcept { return partial_; }

 private:
  std::size_t last_finite_;
  TrainReport partial_;
};

TrainResult train(const PairDataset& data, const ArchConfig& arch, const TrainConfig& cfg);

/// Held-out split used by train(): the trailing ceil(fraction * count) pairs,
/// but never the whole dataset.
std::span<const Pair> heldout_split(const PairDataset& data, double fraction);
std::span<const Pair> training_split(const PairDataset& data, double fraction);

// --- checkpoints ----------------------------------------------------------

struct Checkpoint {
  AuxMap map;
  nlohmann::json meta;
};

/// `meta` is stored verbatim under "meta"; the architecture is always written.
void save_checkpoint(const AuxMap& f, const nlohmann::json& meta, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json to_json(const ArchConfig& arch);
ArchConfig arch_from_json(const nlohmann::json& j);

}  // namespace sgf
