// SPDX-License-Identifier: Apache-2.0
//
// Small dense linear algebra and numerical helpers shared by every module.
// Everything is double precision and single threaded; the sizes involved
// (latent dims in the tens, hidden widths in the hundreds) do not warrant BLAS.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace sgf {

using Vector = std::vector<double>;
using ConstSpan = std::span<const double>;

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, Vector values);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
  ConstSpan row(std::size_t r) const noexcept { return {values_.data() + r * cols_, cols_}; }
  Vector column(std::size_t c) const;
  void set_column(std::size_t c, ConstSpan values);

  std::span<double> values() noexcept { return values_; }
  ConstSpan values() const noexcept { return values_; }

  Matrix transposed() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector values_;
};

// --- vector helpers -------------------------------------------------------

double dot(ConstSpan a, ConstSpan b);
double norm2(ConstSpan v);
double norm_inf(ConstSpan v);
/// y += alpha * x
void axpy(double alpha, ConstSpan x, std::span<double> y);
Vector add(ConstSpan a, ConstSpan b);
Vector subtract(ConstSpan a, ConstSpan b);
Vector scaled(ConstSpan v, double alpha);
bool all_finite(ConstSpan v);

/// m * v
Vector matvec(const Matrix& m, ConstSpan v);
/// m^T * v
Vector matvec_transposed(const Matrix& m, ConstSpan v);
Matrix matmul(const Matrix& a, const Matrix& b);
/// Largest absolute column sum.
double norm1(const Matrix& m);

// --- random numbers -------------------------------------------------------

/// xoshiro256** seeded through splitmix64. Gaussian variates use the
/// Box-Muller transform on two 53-bit uniforms, caching the second variate,
/// so a stream is reproducible from (seed, draw count) alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double gaussian() noexcept;
  /// Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  std::uint64_t seed() const noexcept { return seed_; }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent child seed, e.g. one stream per evaluation sample.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

Vector sample_gaussian(Rng& rng, std::size_t dim);
Matrix sample_gaussian(Rng& rng, std::size_t rows, std::size_t cols);
/// Random direction on the unit sphere.
Vector sample_unit(Rng& rng, std::size_t dim);

// --- power iteration ------------------------------------------------------

struct PowerIterationResult {
  double sigma = 0.0;
  Vector u;  // unit left-singular estimate, length m.rows()
};

/// Estimates the largest singular value of `m`. `u0` lives in the row space
/// (length m.rows()). Each iteration does v = normalize(m^T u),
/// u = normalize(m v); the returned sigma is ||m^T u|| for the final u.
PowerIterationResult power_iteration(const Matrix& m, ConstSpan u0, std::size_t iters);

// --- Adam -----------------------------------------------------------------

struct AdamHyperParams {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  AdamState(std::size_t size, AdamHyperParams hp = {});

  /// Bias-corrected Adam update applied in place.
  void step(std::span<double> params, ConstSpan grads);

  std::size_t size() const noexcept { return first_.size(); }
  std::uint64_t step_count() const noexcept { return step_; }
  const AdamHyperParams& hyper_params() const noexcept { return hp_; }
  ConstSpan first_moment() const noexcept { return first_; }
  ConstSpan second_moment() const noexcept { return second_; }

 private:
  AdamHyperParams hp_;
  Vector first_;
  Vector second_;
  std::uint64_t step_ = 0;
};

/// Functional form: returns updated parameters and advances `state`.
Vector adam_step(AdamState& state, ConstSpan params, ConstSpan grads);

// --- finite differences ---------------------------------------------------

using VectorFunction = std::function<Vector(ConstSpan)>;

/// (f(x + h dir) - f(x - h dir)) / 2h
Vector finite_diff_jvp(const VectorFunction& f, ConstSpan x, ConstSpan dir, double h = 1e-5);

// --- dense solve ----------------------------------------------------------

/// LU factorisation with partial pivoting.
class LuDecomposition {
 public:
  explicit LuDecomposition(Matrix a);

  bool singular() const noexcept { return singular_; }
  Vector solve(ConstSpan b) const;
  Matrix inverse() const;
  /// 1-norm condition number; +inf when singular.
  double condition_number() const;

 private:
  Matrix lu_;
  std::vector<std::size_t> perm_;
  double norm1_ = 0.0;
  bool singular_ = false;
};

}  // namespace sgf
