// SPDX-License-Identifier: Apache-2.0
#include "sgf/auxmap.hpp"

#include <cmath>
#include <string>

#include "sgf/errors.hpp"

namespace sgf {

namespace {

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw InvalidArgument(std::string(what) + ": expected length " + std::to_string(want) + ", got " +
                          std::to_string(got));
  }
}

double mean(ConstSpan v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Adds scale * a b^T into m.
void add_outer(Matrix& m, ConstSpan a, ConstSpan b, double scale) {
  for (std::size_t r = 0; r < a.size(); ++r) {
    const double ar = a[r] * scale;
    if (ar == 0.0) continue;
    auto row = m.row(r);
    for (std::size_t c = 0; c < b.size(); ++c) row[c] += ar * b[c];
  }
}

// Applies the Jacobian of instance_normalize at a point with normalised
// features x_hat and 1/std inv_std. The operator is symmetric, so the same
// routine serves forward (JVP) and reverse (VJP) mode.
Vector normalize_tangent(ConstSpan x_hat, double inv_std, ConstSpan t) {
  const double t_mean = mean(t);
  double proj = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) proj += x_hat[i] * t[i];
  proj /= static_cast<double>(t.size());
  Vector out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = inv_std * (t[i] - t_mean - x_hat[i] * proj);
  return out;
}

Vector affine(const Matrix& w, ConstSpan x, ConstSpan b) {
  Vector out = matvec(w, x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

// (w / sigma) x + b
Vector normalized_affine(const Matrix& w, double sigma, ConstSpan x, ConstSpan b) {
  Vector out = matvec(w, x);
  const double inv = 1.0 / sigma;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] * inv + b[i];
  return out;
}

void power_step(const Matrix& w, Vector& u, double& sigma, std::size_t steps) {
  if (steps == 0) return;
  auto result = power_iteration(w, u, steps);
  u = std::move(result.u);
  sigma = result.sigma;
}

}  // namespace

// --- free helpers ---------------------------------------------------------

Matrix jacobian_z(const AuxiliaryMapping& f, ConstSpan z, ConstSpan c) {
  const std::size_t d = f.latent_dim();
  Matrix jac(d, d);
  Vector e(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    e[k] = 1.0;
    jac.set_column(k, f.jvp_z(z, c, e));
    e[k] = 0.0;
  }
  return jac;
}

Matrix jacobian_c(const AuxiliaryMapping& f, ConstSpan z, ConstSpan c) {
  const std::size_t d = f.latent_dim();
  const std::size_t nc = f.cond_dim();
  Matrix jac(d, nc);
  Vector e(nc, 0.0);
  for (std::size_t k = 0; k < nc; ++k) {
    e[k] = 1.0;
    jac.set_column(k, f.jvp_c(z, c, e));
    e[k] = 0.0;
  }
  return jac;
}

double spectral_radius_z(const AuxiliaryMapping& f, ConstSpan z, ConstSpan c, std::size_t iters) {
  if (iters == 0) throw InvalidArgument("spectral_radius_z: iters must be >= 1");
  const Matrix jac = jacobian_z(f, z, c);
  if (norm_inf(jac.values()) == 0.0) return 0.0;
  // Fixed start so repeated calls agree bitwise.
  Rng rng(0x5eed5eedULL);
  return power_iteration(jac, sample_unit(rng, jac.rows()), iters).sigma;
}

Vector instance_normalize(ConstSpan x, double eps) {
  const double mu = mean(x);
  double var = 0.0;
  for (double v : x) var += (v - mu) * (v - mu);
  var /= static_cast<double>(x.size());
  const double inv_std = 1.0 / std::sqrt(var + eps);
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mu) * inv_std;
  return out;
}

Vector adain(ConstSpan x, ConstSpan gamma, ConstSpan beta, double eps) {
  require_dim(gamma.size(), x.size(), "adain gamma");
  require_dim(beta.size(), x.size(), "adain beta");
  Vector out = instance_normalize(x, eps);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gamma[i] * out[i] + beta[i];
  return out;
}

double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

double leaky_relu_grad(double x, double slope) { return x >= 0.0 ? 1.0 : slope; }

// --- AffineAuxMap ---------------------------------------------------------

AffineAuxMap::AffineAuxMap(Matrix a, Matrix b, Vector bias)
    : a_(std::move(a)), b_(std::move(b)), bias_(std::move(bias)) {
  if (a_.rows() != a_.cols()) throw InvalidArgument("AffineAuxMap: A must be square");
  require_dim(b_.rows(), a_.rows(), "AffineAuxMap B rows");
  require_dim(bias_.size(), a_.rows(), "AffineAuxMap bias");
}

Vector AffineAuxMap::forward(ConstSpan z, ConstSpan c) const {
  Vector out = add(matvec(a_, z), matvec(b_, c));
  axpy(1.0, bias_, out);
  return out;
}

Vector AffineAuxMap::jvp_z(ConstSpan, ConstSpan, ConstSpan dir) const { return matvec(a_, dir); }

Vector AffineAuxMap::jvp_c(ConstSpan, ConstSpan, ConstSpan dir) const { return matvec(b_, dir); }

// --- ArchConfig -----------------------------------------------------------

void ArchConfig::validate() const {
  if (latent_dim == 0 || cond_dim == 0 || hidden == 0) {
    throw InvalidArgument("ArchConfig: dimensions must be >= 1");
  }
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) {
    throw InvalidArgument("ArchConfig: leaky_slope must lie in (0, 1)");
  }
  if (!(adain_eps > 0.0)) throw InvalidArgument("ArchConfig: adain_eps must be positive");
}

// --- ParamGrads -----------------------------------------------------------

std::vector<std::span<double>> ParamGrads::tensors() {
  std::vector<std::span<double>> out;
  out.reserve(blocks.size() * 6 + 2);
  for (auto& b : blocks) {
    out.emplace_back(b.weight.values());
    out.emplace_back(b.bias);
    out.emplace_back(b.gamma_weight.values());
    out.emplace_back(b.gamma_bias);
    out.emplace_back(b.beta_weight.values());
    out.emplace_back(b.beta_bias);
  }
  out.emplace_back(out_weight.values());
  out.emplace_back(out_bias);
  return out;
}

void ParamGrads::scale(double alpha) {
  for (auto t : tensors())
    for (double& x : t) x *= alpha;
}

void ParamGrads::accumulate(const ParamGrads& other) {
  auto mine = tensors();
  auto theirs = const_cast<ParamGrads&>(other).tensors();
  if (mine.size() != theirs.size()) throw InvalidArgument("ParamGrads::accumulate: shape mismatch");
  for (std::size_t i = 0; i < mine.size(); ++i) axpy(1.0, theirs[i], mine[i]);
}

// --- AuxMap ---------------------------------------------------------------

AuxMap AuxMap::init(const ArchConfig& arch, Rng& rng, std::size_t init_power_steps) {
  arch.validate();
  constexpr double kGammaInitStd = 0.01;
  constexpr double kBetaInitStd = 0.7;
  constexpr double kBiasInitStd = 1.0;

  std::vector<BlockParams> blocks;
  blocks.reserve(arch.n_blocks);
  std::size_t in = arch.latent_dim;
  for (std::size_t i = 0; i < arch.n_blocks; ++i) {
    BlockParams b;
    b.weight = sample_gaussian(rng, arch.hidden, in);
    for (double& w : b.weight.values()) w /= std::sqrt(static_cast<double>(in));
    b.bias = scaled(sample_gaussian(rng, arch.hidden), kBiasInitStd);
    b.sn_u = sample_unit(rng, arch.hidden);
    b.gamma_weight = sample_gaussian(rng, arch.hidden, arch.cond_dim);
    for (double& w : b.gamma_weight.values()) w *= kGammaInitStd;
    b.gamma_bias.assign(arch.hidden, 1.0);
    b.beta_weight = sample_gaussian(rng, arch.hidden, arch.cond_dim);
    for (double& w : b.beta_weight.values()) w *= kBetaInitStd;
    b.beta_bias.assign(arch.hidden, 0.0);
    power_step(b.weight, b.sn_u, b.sn_sigma, init_power_steps);
    blocks.push_back(std::move(b));
    in = arch.hidden;
  }

  Matrix out_weight = sample_gaussian(rng, arch.latent_dim, in);
  for (double& w : out_weight.values()) w /= std::sqrt(static_cast<double>(in));
  Vector out_u = sample_unit(rng, arch.latent_dim);
  double out_sigma = 1.0;
  power_step(out_weight, out_u, out_sigma, init_power_steps);
  return AuxMap(arch, std::move(blocks), std::move(out_weight), Vector(arch.latent_dim, 0.0), std::move(out_u),
                out_sigma);
}

AuxMap::AuxMap(ArchConfig arch, std::vector<BlockParams> blocks, Matrix out_weight, Vector out_bias,
               Vector out_sn_u, double out_sn_sigma)
    : arch_(arch),
      blocks_(std::move(blocks)),
      out_weight_(std::move(out_weight)),
      out_bias_(std::move(out_bias)),
      out_sn_u_(std::move(out_sn_u)),
      out_sn_sigma_(out_sn_sigma) {
  arch_.validate();
  require_dim(blocks_.size(), arch_.n_blocks, "AuxMap block count");
  std::size_t in = arch_.latent_dim;
  for (const auto& b : blocks_) {
    if (b.weight.rows() != arch_.hidden || b.weight.cols() != in) {
      throw InvalidArgument("AuxMap: block weight has wrong shape");
    }
    require_dim(b.bias.size(), arch_.hidden, "AuxMap block bias");
    require_dim(b.sn_u.size(), arch_.hidden, "AuxMap block sn_u");
    if (b.gamma_weight.rows() != arch_.hidden || b.gamma_weight.cols() != arch_.cond_dim ||
        b.beta_weight.rows() != arch_.hidden || b.beta_weight.cols() != arch_.cond_dim) {
      throw InvalidArgument("AuxMap: AdaIN affine has wrong shape");
    }
    require_dim(b.gamma_bias.size(), arch_.hidden, "AuxMap gamma bias");
    require_dim(b.beta_bias.size(), arch_.hidden, "AuxMap beta bias");
    if (!(b.sn_sigma > 0.0)) throw InvalidArgument("AuxMap: sigma must be positive");
    in = arch_.hidden;
  }
  if (out_weight_.rows() != arch_.latent_dim || out_weight_.cols() != in) {
    throw InvalidArgument("AuxMap: head weight has wrong shape");
  }
  require_dim(out_bias_.size(), arch_.latent_dim, "AuxMap head bias");
  require_dim(out_sn_u_.size(), arch_.latent_dim, "AuxMap head sn_u");
  if (!(out_sn_sigma_ > 0.0)) throw InvalidArgument("AuxMap: sigma must be positive");
}

void AuxMap::check_inputs(ConstSpan z, ConstSpan c) const {
  require_dim(z.size(), arch_.latent_dim, "AuxMap z");
  require_dim(c.size(), arch_.cond_dim, "AuxMap c");
}

Vector AuxMap::forward_cached(ConstSpan z, ConstSpan c, std::vector<BlockCache>* cache) const {
  check_inputs(z, c);
  Vector h(z.begin(), z.end());
  if (cache) cache->resize(blocks_.size());
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& b = blocks_[i];
    Vector x = normalized_affine(b.weight, b.sn_sigma, h, b.bias);
    const double mu = mean(x);
    double var = 0.0;
    for (double v : x) var += (v - mu) * (v - mu);
    var /= static_cast<double>(x.size());
    const double inv_std = 1.0 / std::sqrt(var + arch_.adain_eps);
    Vector gamma = affine(b.gamma_weight, c, b.gamma_bias);
    Vector beta = affine(b.beta_weight, c, b.beta_bias);

    Vector x_hat(x.size());
    Vector y(x.size());
    Vector next(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      x_hat[k] = (x[k] - mu) * inv_std;
      y[k] = gamma[k] * x_hat[k] + beta[k];
      next[k] = leaky_relu(y[k], arch_.leaky_slope);
    }
    if (cache) {
      auto& bc = (*cache)[i];
      bc.input = std::move(h);
      bc.x_hat = std::move(x_hat);
      bc.gamma = std::move(gamma);
      bc.y = std::move(y);
      bc.inv_std = inv_std;
    }
    h = std::move(next);
  }
  Vector out = normalized_affine(out_weight_, out_sn_sigma_, h, out_bias_);
  if (cache) cache->push_back(BlockCache{std::move(h), {}, {}, {}, 0.0});
  return out;
}

Vector AuxMap::forward(ConstSpan z, ConstSpan c) const { return forward_cached(z, c, nullptr); }

Vector AuxMap::jvp(ConstSpan z, ConstSpan c, ConstSpan dz, ConstSpan dc) const {
  check_inputs(z, c);
  require_dim(dz.size(), arch_.latent_dim, "AuxMap jvp dz");
  require_dim(dc.size(), arch_.cond_dim, "AuxMap jvp dc");
  const bool has_dc = norm_inf(dc) != 0.0;

  Vector h(z.begin(), z.end());
  Vector dh(dz.begin(), dz.end());
  for (const auto& b : blocks_) {
    Vector x = normalized_affine(b.weight, b.sn_sigma, h, b.bias);
    Vector dx = scaled(matvec(b.weight, dh), 1.0 / b.sn_sigma);
    const double mu = mean(x);
    double var = 0.0;
    for (double v : x) var += (v - mu) * (v - mu);
    var /= static_cast<double>(x.size());
    const double inv_std = 1.0 / std::sqrt(var + arch_.adain_eps);
    Vector x_hat(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) x_hat[k] = (x[k] - mu) * inv_std;
    const Vector dx_hat = normalize_tangent(x_hat, inv_std, dx);

    const Vector gamma = affine(b.gamma_weight, c, b.gamma_bias);
    const Vector beta = affine(b.beta_weight, c, b.beta_bias);
    Vector dgamma;
    Vector dbeta;
    if (has_dc) {
      dgamma = matvec(b.gamma_weight, dc);
      dbeta = matvec(b.beta_weight, dc);
    }
    Vector next(x.size());
    Vector dnext(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double y = gamma[k] * x_hat[k] + beta[k];
      double dy = gamma[k] * dx_hat[k];
      if (has_dc) dy += dgamma[k] * x_hat[k] + dbeta[k];
      next[k] = leaky_relu(y, arch_.leaky_slope);
      dnext[k] = leaky_relu_grad(y, arch_.leaky_slope) * dy;
    }
    h = std::move(next);
    dh = std::move(dnext);
  }
  return scaled(matvec(out_weight_, dh), 1.0 / out_sn_sigma_);
}

Vector AuxMap::jvp_z(ConstSpan z, ConstSpan c, ConstSpan dir) const {
  const Vector zero_c(arch_.cond_dim, 0.0);
  return jvp(z, c, dir, zero_c);
}

Vector AuxMap::jvp_c(ConstSpan z, ConstSpan c, ConstSpan dir) const {
  const Vector zero_z(arch_.latent_dim, 0.0);
  return jvp(z, c, zero_z, dir);
}

ParamGrads AuxMap::zero_grads() const {
  ParamGrads g;
  g.blocks.reserve(blocks_.size());
  for (const auto& b : blocks_) {
    g.blocks.push_back(BlockGrads{Matrix(b.weight.rows(), b.weight.cols()), Vector(b.bias.size(), 0.0),
                                  Matrix(b.gamma_weight.rows(), b.gamma_weight.cols()),
                                  Vector(b.gamma_bias.size(), 0.0),
                                  Matrix(b.beta_weight.rows(), b.beta_weight.cols()),
                                  Vector(b.beta_bias.size(), 0.0)});
  }
  g.out_weight = Matrix(out_weight_.rows(), out_weight_.cols());
  g.out_bias.assign(out_bias_.size(), 0.0);
  return g;
}

Vector AuxMap::forward_backward(ConstSpan z, ConstSpan c, const std::function<Vector(ConstSpan)>& output_grad,
                                ParamGrads& grads) const {
  std::vector<BlockCache> cache;
  Vector out = forward_cached(z, c, &cache);
  const Vector g_out = output_grad(out);
  require_dim(g_out.size(), arch_.latent_dim, "AuxMap backward out_grad");

  // Head.
  const ConstSpan h_last = cache.back().input;
  add_outer(grads.out_weight, g_out, h_last, 1.0 / out_sn_sigma_);
  axpy(1.0, g_out, grads.out_bias);
  Vector gh = scaled(matvec_transposed(out_weight_, g_out), 1.0 / out_sn_sigma_);

  for (std::size_t i = blocks_.size(); i-- > 0;) {
    const auto& b = blocks_[i];
    const auto& bc = cache[i];
    auto& bg = grads.blocks[i];
    Vector gy(gh.size());
    for (std::size_t k = 0; k < gh.size(); ++k) gy[k] = gh[k] * leaky_relu_grad(bc.y[k], arch_.leaky_slope);

    Vector g_gamma(gy.size());
    Vector g_xhat(gy.size());
    for (std::size_t k = 0; k < gy.size(); ++k) {
      g_gamma[k] = gy[k] * bc.x_hat[k];
      g_xhat[k] = gy[k] * bc.gamma[k];
    }
    add_outer(bg.gamma_weight, g_gamma, c, 1.0);
    axpy(1.0, g_gamma, bg.gamma_bias);
    add_outer(bg.beta_weight, gy, c, 1.0);
    axpy(1.0, gy, bg.beta_bias);

    const Vector gx = normalize_tangent(bc.x_hat, bc.inv_std, g_xhat);
    add_outer(bg.weight, gx, bc.input, 1.0 / b.sn_sigma);
    axpy(1.0, gx, bg.bias);
    gh = scaled(matvec_transposed(b.weight, gx), 1.0 / b.sn_sigma);
  }
  return out;
}

ParamGrads AuxMap::backward(ConstSpan z, ConstSpan c, ConstSpan out_grad) const {
  require_dim(out_grad.size(), arch_.latent_dim, "AuxMap backward out_grad");
  ParamGrads grads = zero_grads();
  const Vector g(out_grad.begin(), out_grad.end());
  forward_backward(z, c, [&g](ConstSpan) { return g; }, grads);
  return grads;
}

void AuxMap::spectral_normalize(std::size_t power_steps) {
  for (auto& b : blocks_) power_step(b.weight, b.sn_u, b.sn_sigma, power_steps);
  power_step(out_weight_, out_sn_u_, out_sn_sigma_, power_steps);
}

std::vector<Vector> AuxMap::gammas(ConstSpan c) const {
  require_dim(c.size(), arch_.cond_dim, "AuxMap gammas c");
  std::vector<Vector> out;
  out.reserve(blocks_.size());
  for (const auto& b : blocks_) out.push_back(affine(b.gamma_weight, c, b.gamma_bias));
  return out;
}

Matrix AuxMap::effective_weight(std::size_t i) const {
  if (i > blocks_.size()) throw InvalidArgument("AuxMap::effective_weight: index out of range");
  const Matrix& w = i == blocks_.size() ? out_weight_ : blocks_[i].weight;
  const double sigma = i == blocks_.size() ? out_sn_sigma_ : blocks_[i].sn_sigma;
  Matrix out = w;
  for (double& v : out.values()) v /= sigma;
  return out;
}

std::vector<std::span<double>> AuxMap::parameters() {
  std::vector<std::span<double>> out;
  out.reserve(blocks_.size() * 6 + 2);
  for (auto& b : blocks_) {
    out.emplace_back(b.weight.values());
    out.emplace_back(b.bias);
    out.emplace_back(b.gamma_weight.values());
    out.emplace_back(b.gamma_bias);
    out.emplace_back(b.beta_weight.values());
    out.emplace_back(b.beta_bias);
  }
  out.emplace_back(out_weight_.values());
  out.emplace_back(out_bias_);
  return out;
}

std::size_t AuxMap::parameter_count() const {
  std::size_t n = out_weight_.size() + out_bias_.size();
  for (const auto& b : blocks_) {
    n += b.weight.size() + b.bias.size() + b.gamma_weight.size() + b.gamma_bias.size() + b.beta_weight.size() +
         b.beta_bias.size();
  }
  return n;
}

bool operator==(const AuxMap& a, const AuxMap& b) {
  return a.arch_ == b.arch_ && a.blocks_ == b.blocks_ && a.out_weight_ == b.out_weight_ &&
         a.out_bias_ == b.out_bias_ && a.out_sn_u_ == b.out_sn_u_ && a.out_sn_sigma_ == b.out_sn_sigma_;
}

}  // namespace sgf
