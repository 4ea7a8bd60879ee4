// SPDX-License-Identifier: Apache-2.0
//
// The auxiliary mapping F : Z x C -> Z, trained so that F(z, phi(z)) = z.
//
// The network is a stack of conditional linear blocks
//
//     x  = (W / sigma_W) h + b
//     y  = gamma(c) * (x - mean(x)) / sqrt(var(x) + eps) + beta(c)     (AdaIN)
//     h' = LeakyReLU(y)
//
// with gamma(c) = Gg c + bg and beta(c) = Gb c + bb, followed by a spectrally
// normalised linear head. sigma_W is the cached power-iteration estimate of
// the weight's largest singular value; it is refreshed by
// spectral_normalize() and held constant everywhere else (forward, JVPs and
// parameter gradients).
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sgf/numerics.hpp"

namespace sgf {

/// Anything that can act as F for navigation: forward evaluation plus
/// directional derivatives in both arguments.
class AuxiliaryMapping {
 public:
  virtual ~AuxiliaryMapping() = default;

  virtual std::size_t latent_dim() const = 0;
  virtual std::size_t cond_dim() const = 0;

  virtual Vector forward(ConstSpan z, ConstSpan c) const = 0;
  /// (dF/dz)(z, c) * dir
  virtual Vector jvp_z(ConstSpan z, ConstSpan c, ConstSpan dir) const = 0;
  /// (dF/dc)(z, c) * dir
  virtual Vector jvp_c(ConstSpan z, ConstSpan c, ConstSpan dir) const = 0;
};

/// d x d Jacobian in z, assembled column by column from jvp_z.
Matrix jacobian_z(const AuxiliaryMapping& f, ConstSpan z, ConstSpan c);

/// d x n_c Jacobian in c, assembled from jvp_c.
Matrix jacobian_c(const AuxiliaryMapping& f, ConstSpan z, ConstSpan c);

/// Power-iteration estimate of ||dF/dz||_op at (z, c). This upper-bounds the
/// spectral radius, which is what the Neumann expansion needs below 1.
double spectral_radius_z(const AuxiliaryMapping& f, ConstSpan z, ConstSpan c, std::size_t iters = 100);

/// F(z, c) = A z + B c + b. Hand-built worlds and tests.
class AffineAuxMap final : public AuxiliaryMapping {
 public:
  AffineAuxMap(Matrix a, Matrix b, Vector bias);

  std::size_t latent_dim() const override { return a_.rows(); }
  std::size_t cond_dim() const override { return b_.cols(); }

  Vector forward(ConstSpan z, ConstSpan c) const override;
  Vector jvp_z(ConstSpan z, ConstSpan c, ConstSpan dir) const override;
  Vector jvp_c(ConstSpan z, ConstSpan c, ConstSpan dir) const override;

 private:
  Matrix a_;
  Matrix b_;
  Vector bias_;
};

struct ArchConfig {
  std::size_t latent_dim = 16;
  std::size_t cond_dim = 4;
  std::size_t n_blocks = 6;
  std::size_t hidden = 64;
  double leaky_slope = 0.2;
  double adain_eps = 1e-5;

  /// Throws InvalidArgument. n_blocks may be 0, which leaves only the linear
  /// head (a single-layer F that ignores c).
  void validate() const;

  friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

struct BlockParams {
  Matrix weight;  // hidden x in
  Vector bias;
  Vector sn_u;  // persistent left-singular estimate, length hidden
  double sn_sigma = 1.0;
  Matrix gamma_weight;  // hidden x n_c
  Vector gamma_bias;
  Matrix beta_weight;  // hidden x n_c
  Vector beta_bias;

  friend bool operator==(const BlockParams&, const BlockParams&) = default;
};

struct BlockGrads {
  Matrix weight;
  Vector bias;
  Matrix gamma_weight;
  Vector gamma_bias;
  Matrix beta_weight;
  Vector beta_bias;
};

/// Gradients w.r.t. every trainable (raw, pre-normalisation) parameter.
struct ParamGrads {
  std::vector<BlockGrads> blocks;
  Matrix out_weight;
  Vector out_bias;

  /// Same order as AuxMap::parameters().
  std::vector<std::span<double>> tensors();
  void scale(double alpha);
  /// this += other
  void accumulate(const ParamGrads& other);
};

// Pure pieces of a block, exposed for testing.
Vector adain(ConstSpan x, ConstSpan gamma, ConstSpan beta, double eps);
/// (x - mean) / sqrt(var + eps) over the feature dimension.
Vector instance_normalize(ConstSpan x, double eps);
double leaky_relu(double x, double slope);
/// Derivative; at exactly 0 the positive-side slope 1 is used.
double leaky_relu_grad(double x, double slope);

class AuxMap final : public AuxiliaryMapping {
 public:
  /// Gaussian FC weights scaled by 1/sqrt(fan_in) with N(0, 1) biases.
  /// gamma(c) = 1 + 0.01 N c; beta(c) = 0.7 N c, so beta is exactly 0 at
  /// c = 0 but the shift path is live from the first update. Sigma caches
  /// are converged by `init_power_steps` power iterations.
  static AuxMap init(const ArchConfig& arch, Rng& rng, std::size_t init_power_steps = 30);

  AuxMap(ArchConfig arch, std::vector<BlockParams> blocks, Matrix out_weight, Vector out_bias,
         Vector out_sn_u, double out_sn_sigma);

  const ArchConfig& arch() const noexcept { return arch_; }
  std::size_t latent_dim() const override { return arch_.latent_dim; }
  std::size_t cond_dim() const override { return arch_.cond_dim; }

  Vector forward(ConstSpan z, ConstSpan c) const override;
  Vector jvp_z(ConstSpan z, ConstSpan c, ConstSpan dir) const override;
  Vector jvp_c(ConstSpan z, ConstSpan c, ConstSpan dir) const override;
  /// Joint directional derivative along (dz, dc).
  Vector jvp(ConstSpan z, ConstSpan c, ConstSpan dz, ConstSpan dc) const;

  /// Gradient of <forward(z, c), out_grad> w.r.t. the raw parameters, with
  /// every sigma held fixed.
  ParamGrads backward(ConstSpan z, ConstSpan c, ConstSpan out_grad) const;
  /// Forward, then backward with out_grad = output_grad(F(z, c)); adds into
  /// `grads` and returns F(z, c). Saves a second forward pass in training.
  Vector forward_backward(ConstSpan z, ConstSpan c, const std::function<Vector(ConstSpan)>& output_grad,
                          ParamGrads& grads) const;
  ParamGrads zero_grads() const;

  /// Runs `power_steps` power-iteration steps on every spectrally normalised
  /// weight, updating the persistent u vectors and the cached sigmas.
  void spectral_normalize(std::size_t power_steps = 1);

  /// Per-block gamma(c) (one entry per hidden unit).
  std::vector<Vector> gammas(ConstSpan c) const;

  /// W / sigma for block `i` (i == n_blocks() selects the head).
  Matrix effective_weight(std::size_t i) const;

  std::size_t n_blocks() const noexcept { return blocks_.size(); }
  const std::vector<BlockParams>& blocks() const noexcept { return blocks_; }
  std::vector<BlockParams>& blocks() noexcept { return blocks_; }
  const Matrix& out_weight() const noexcept { return out_weight_; }
  Matrix& out_weight() noexcept { return out_weight_; }
  const Vector& out_bias() const noexcept { return out_bias_; }
  Vector& out_bias() noexcept { return out_bias_; }
  const Vector& out_sn_u() const noexcept { return out_sn_u_; }
  Vector& out_sn_u() noexcept { return out_sn_u_; }
  double out_sn_sigma() const noexcept { return out_sn_sigma_; }
  void set_out_sn_sigma(double s) noexcept { out_sn_sigma_ = s; }

  /// Trainable tensors in a fixed order: for each block weight, bias,
  /// gamma_weight, gamma_bias, beta_weight, beta_bias; then out_weight,
  /// out_bias.
  std::vector<std::span<double>> parameters();
  std::size_t parameter_count() const;

  /// Compares every parameter and sigma cache exactly.
  friend bool operator==(const AuxMap& a, const AuxMap& b);

 private:
  struct BlockCache {
    Vector input;
    Vector x_hat;
    Vector gamma;
    Vector y;
    double inv_std = 0.0;
  };

  void check_inputs(ConstSpan z, ConstSpan c) const;
  Vector forward_cached(ConstSpan z, ConstSpan c, std::vector<BlockCache>* cache) const;

  ArchConfig arch_;
  std::vector<BlockParams> blocks_;
  Matrix out_weight_;
  Vector out_bias_;
  Vector out_sn_u_;
  double out_sn_sigma_ = 1.0;
};

}  // namespace sgf
