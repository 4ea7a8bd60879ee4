// SPDX-License-Identifier: Apache-2.0
//
// Forward-only condition predictors phi = C o G. The library never sees a
// generator or a classifier separately; it only queries their composite.
//
// Built-in synthetic worlds (all matrices seeded, rows normalised to unit
// length so attribute sensitivities are O(1)):
//
//   linear          phi(z) = gain * E z, E selecting the first n_c latent
//                   coordinates (or a random row-normalised matrix when
//                   random=1)
//   sigmoid-attrs   phi(z) = sigmoid(scale * (A z + b)),  b ~ bias * N(0, 1)
//   tanh-mix        phi(z) = sigmoid(gain * A tanh(scale * B z)),
//                   B is width x d, A is n_c x width
//   keypoint-bumps  phi_j(z) = box * tanh(a_j.z + height * exp(-|z - mu_j|^2 / (2 width^2)))
//                   n_c must be even: (x, y) pairs of n_c / 2 keypoints
//   external        child process speaking line-delimited JSON (see
//                   ExternalOracle)
//
// Spec strings look like "sigmoid-attrs:d=16,nc=4,seed=7,scale=1" or
// "external:d=16,nc=4,cmd=python3 oracle.py". For external oracles `cmd`
// must come last and swallows the rest of the string, commas included.
#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sgf/numerics.hpp"

namespace sgf {

struct OracleSpec {
  std::string kind;
  std::size_t d = 0;
  std::size_t n_c = 0;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> params;

  /// Parses "kind:key=val,...". d, nc and seed may be omitted and filled in
  /// later from the defaults given here.
  static OracleSpec parse(const std::string& text, std::size_t default_d = 0, std::size_t default_nc = 0,
                          std::uint64_t default_seed = 0);

  /// Canonical text form; parse(canonical()) reproduces the same oracle spec.
  std::string canonical() const;
  /// SHA-256 of canonical().
  std::array<std::uint8_t, 32> digest() const;

  double param_or(const std::string& key, double fallback) const;
  void validate() const;

  friend bool operator==(const OracleSpec&, const OracleSpec&) = default;
};

using Digest = std::array<std::uint8_t, 32>;
std::string to_hex(const Digest& d);

/// Base class. eval() is the only way conditions are produced and increments
/// call_count() by one per latent vector.
class Oracle {
 public:
  Oracle(std::size_t d, std::size_t n_c);
  virtual ~Oracle() = default;
  Oracle(const Oracle&) = delete;
  Oracle& operator=(const Oracle&) = delete;

  std::size_t latent_dim() const noexcept { return d_; }
  std::size_t cond_dim() const noexcept { return n_c_; }

  Vector eval(ConstSpan z);
  std::vector<Vector> eval_batch(const std::vector<Vector>& zs);

  /// Analytic n_c x d Jacobian of phi. Throws UnsupportedOperation for
  /// oracles that cannot be differentiated.
  virtual Matrix eval_grad(ConstSpan z) const;
  virtual bool has_gradient() const { return false; }
  /// Whether eval may be called from several threads at once.
  virtual bool concurrent() const { return true; }

  std::uint64_t call_count() const noexcept { return calls_.load(); }

  /// Spec this oracle was built from, when it came from build_oracle().
  const std::optional<OracleSpec>& spec() const noexcept { return spec_; }
  void set_spec(OracleSpec spec) { spec_ = std::move(spec); }
  /// Digest of spec(), zeros for hand-made oracles.
  Digest digest() const;

 protected:
  virtual Vector do_eval(ConstSpan z) = 0;
  virtual std::vector<Vector> do_eval_batch(const std::vector<Vector>& zs);
  void check_latent(ConstSpan z) const;

 private:
  std::size_t d_;
  std::size_t n_c_;
  std::atomic<std::uint64_t> calls_{0};
  std::optional<OracleSpec> spec_;
};

class LinearOracle final : public Oracle {
 public:
  explicit LinearOracle(Matrix gamma);
  const Matrix& matrix() const noexcept { return gamma_; }
  Matrix eval_grad(ConstSpan z) const override;
  bool has_gradient() const override { return true; }

 protected:
  Vector do_eval(ConstSpan z) override;

 private:
  Matrix gamma_;
};

class SigmoidAttrsOracle final : public Oracle {
 public:
  SigmoidAttrsOracle(Matrix a, Vector b, double scale);
  const Matrix& matrix() const noexcept { return a_; }
  const Vector& offset() const noexcept { return b_; }
  Matrix eval_grad(ConstSpan z) const override;
  bool has_gradient() const override { return true; }

 protected:
  Vector do_eval(ConstSpan z) override;

 private:
  Matrix a_;
  Vector b_;
  double scale_;
};

class TanhMixOracle final : public Oracle {
 public:
  TanhMixOracle(Matrix outer, Matrix inner, double gain, double scale);
  Matrix eval_grad(ConstSpan z) const override;
  bool has_gradient() const override { return true; }

 protected:
  Vector do_eval(ConstSpan z) override;

 private:
  Matrix outer_;  // n_c x width
  Matrix inner_;  // width x d
  double gain_;
  double scale_;
};

class KeypointBumpsOracle final : public Oracle {
 public:
  KeypointBumpsOracle(Matrix directions, Matrix centers, double box, double height, double width);
  Matrix eval_grad(ConstSpan z) const override;
  bool has_gradient() const override { return true; }

 protected:
  Vector do_eval(ConstSpan z) override;

 private:
  Matrix directions_;  // n_c x d
  Matrix centers_;     // n_c x d
  double box_;
  double height_;
  double width_;
};

/// Runs `command` through /bin/sh and talks to it over stdin/stdout:
///
///   child -> parent, first line   {"protocol":1,"d":<int>,"n_c":<int>}
///   parent -> child               {"id":<int>,"z":[[...], ...]}
///   child -> parent               {"id":<int>,"c":[[...], ...]}
///
/// Shutdown closes the child's stdin and reaps it. Malformed lines, id
/// mismatches and row-length mismatches throw OracleProtocolError.
class ExternalOracle final : public Oracle {
 public:
  ExternalOracle(const std::string& command, std::size_t d, std::size_t n_c);
  ~ExternalOracle() override;

  bool concurrent() const override { return false; }
  int exit_status() const noexcept { return exit_status_; }
  /// Closes the pipe and waits for the child; returns its exit status.
  int shutdown();

 protected:
  Vector do_eval(ConstSpan z) override;
  std::vector<Vector> do_eval_batch(const std::vector<Vector>& zs) override;

 private:
  std::string read_line();
  void write_line(const std::string& line);

  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::mutex mutex_;
  std::string buffer_;
  std::uint64_t next_id_ = 1;
  int exit_status_ = -1;
};

std::unique_ptr<Oracle> build_oracle(const OracleSpec& spec);

}  // namespace sgf
