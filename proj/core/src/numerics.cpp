// SPDX-License-Identifier: Apache-2.0
#include "sgf/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "sgf/errors.hpp"

namespace sgf {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw InvalidArgument(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                          " vs " + std::to_string(b) + ")");
  }
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void normalize_in_place(Vector& v) {
  const double n = norm2(v);
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
}

}  // namespace

// --- Matrix ---------------------------------------------------------------

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, Vector values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw InvalidArgument("Matrix: rows*cols does not match value count");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Vector values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw InvalidArgument("Matrix::from_rows: ragged rows");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(values));
}

Vector Matrix::column(std::size_t c) const {
  Vector out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void Matrix::set_column(std::size_t c, ConstSpan values) {
  require_same_size(values.size(), rows_, "Matrix::set_column");
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = values[r];
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

// --- vector helpers -------------------------------------------------------

double dot(ConstSpan a, ConstSpan b) {
  require_same_size(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(ConstSpan v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double norm_inf(ConstSpan v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void axpy(double alpha, ConstSpan x, std::span<double> y) {
  require_same_size(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vector add(ConstSpan a, ConstSpan b) {
  require_same_size(a.size(), b.size(), "add");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector subtract(ConstSpan a, ConstSpan b) {
  require_same_size(a.size(), b.size(), "subtract");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector scaled(ConstSpan v, double alpha) {
  Vector out(v.begin(), v.end());
  for (double& x : out) x *= alpha;
  return out;
}

bool all_finite(ConstSpan v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Vector matvec(const Matrix& m, ConstSpan v) {
  require_same_size(m.cols(), v.size(), "matvec");
  Vector out(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) s += row[c] * v[c];
    out[r] = s;
  }
  return out;
}

Vector matvec_transposed(const Matrix& m, ConstSpan v) {
  require_same_size(m.rows(), v.size(), "matvec_transposed");
  Vector out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    const double vr = v[r];
    for (std::size_t c = 0; c < row.size(); ++c) out[c] += row[c] * vr;
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_same_size(a.cols(), b.rows(), "matmul");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

double norm1(const Matrix& m) {
  double best = 0.0;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) s += std::abs(m(r, c));
    best = std::max(best, s);
  }
  return best;
}

// --- Rng ------------------------------------------------------------------

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t sm = seed;
  for (auto& word : s_) word = splitmix64(sm);
}

std::uint64_t Rng::next_u64() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::gaussian() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 1 - uniform() lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw InvalidArgument("Rng::below: bound must be positive");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % bound;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t sm = seed ^ (0xd1b54a32d192ed03ULL * (stream + 1));
  splitmix64(sm);
  return splitmix64(sm);
}

Vector sample_gaussian(Rng& rng, std::size_t dim) {
  if (dim == 0) throw InvalidArgument("sample_gaussian: dim must be >= 1");
  Vector out(dim);
  for (double& x : out) x = rng.gaussian();
  return out;
}

Matrix sample_gaussian(Rng& rng, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw InvalidArgument("sample_gaussian: empty shape");
  return Matrix(rows, cols, sample_gaussian(rng, rows * cols));
}

Vector sample_unit(Rng& rng, std::size_t dim) {
  Vector v = sample_gaussian(rng, dim);
  while (norm2(v) == 0.0) v = sample_gaussian(rng, dim);
  normalize_in_place(v);
  return v;
}

// --- power iteration ------------------------------------------------------

PowerIterationResult power_iteration(const Matrix& m, ConstSpan u0, std::size_t iters) {
  require_same_size(u0.size(), m.rows(), "power_iteration");
  if (iters == 0) throw InvalidArgument("power_iteration: iters must be >= 1");
  if (norm2(u0) == 0.0) throw InvalidArgument("power_iteration: u0 must be nonzero");

  Vector u(u0.begin(), u0.end());
  normalize_in_place(u);
  for (std::size_t it = 0; it < iters; ++it) {
    Vector v = matvec_transposed(m, u);
    if (norm2(v) == 0.0) break;  // u is in the left null space
    normalize_in_place(v);
    Vector next = matvec(m, v);
    if (norm2(next) == 0.0) break;
    normalize_in_place(next);
    u = std::move(next);
  }
  return {norm2(matvec_transposed(m, u)), std::move(u)};
}

// --- Adam -----------------------------------------------------------------

AdamState::AdamState(std::size_t size, AdamHyperParams hp)
    : hp_(hp), first_(size, 0.0), second_(size, 0.0) {
  if (!(hp_.lr > 0.0)) throw InvalidArgument("AdamState: lr must be positive");
}

void AdamState::step(std::span<double> params, ConstSpan grads) {
  require_same_size(params.size(), first_.size(), "AdamState::step params");
  require_same_size(grads.size(), first_.size(), "AdamState::step grads");
  ++step_;
  const double t = static_cast<double>(step_);
  const double bias1 = 1.0 - std::pow(hp_.beta1, t);
  const double bias2 = 1.0 - std::pow(hp_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    first_[i] = hp_.beta1 * first_[i] + (1.0 - hp_.beta1) * g;
    second_[i] = hp_.beta2 * second_[i] + (1.0 - hp_.beta2) * g * g;
    const double m_hat = first_[i] / bias1;
    const double v_hat = second_[i] / bias2;
    params[i] -= hp_.lr * m_hat / (std::sqrt(v_hat) + hp_.eps);
  }
}

Vector adam_step(AdamState& state, ConstSpan params, ConstSpan grads) {
  Vector out(params.begin(), params.end());
  state.step(out, grads);
  return out;
}

// --- finite differences ---------------------------------------------------

Vector finite_diff_jvp(const VectorFunction& f, ConstSpan x, ConstSpan dir, double h) {
  require_same_size(x.size(), dir.size(), "finite_diff_jvp");
  if (!(h > 0.0)) throw InvalidArgument("finite_diff_jvp: h must be positive");
  Vector plus(x.begin(), x.end());
  Vector minus(x.begin(), x.end());
  axpy(h, dir, plus);
  axpy(-h, dir, minus);
  Vector out = subtract(f(plus), f(minus));
  for (double& v : out) v /= 2.0 * h;
  return out;
}

// --- LU -------------------------------------------------------------------

LuDecomposition::LuDecomposition(Matrix a) : lu_(std::move(a)) {
  if (lu_.rows() != lu_.cols()) throw InvalidArgument("LuDecomposition: matrix must be square");
  const std::size_t n = lu_.rows();
  norm1_ = norm1(lu_);
  perm_.resize(n);
  for (std::size_t i = 0; i < n; ++i) perm_[i] = i;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    double best = std::abs(lu_(k, k));
    for (std::size_t r = k + 1; r < n; ++r) {
      if (std::abs(lu_(r, k)) > best) {
        best = std::abs(lu_(r, k));
        pivot = r;
      }
    }
    if (best == 0.0) {
      singular_ = true;
      return;
    }
    if (pivot != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(lu_(k, c), lu_(pivot, c));
      std::swap(perm_[k], perm_[pivot]);
    }
    for (std::size_t r = k + 1; r < n; ++r) {
      const double factor = lu_(r, k) / lu_(k, k);
      lu_(r, k) = factor;
      for (std::size_t c = k + 1; c < n; ++c) lu_(r, c) -= factor * lu_(k, c);
    }
  }
}

Vector LuDecomposition::solve(ConstSpan b) const {
  if (singular_) throw SingularField("LuDecomposition::solve: matrix is singular");
  const std::size_t n = lu_.rows();
  require_same_size(b.size(), n, "LuDecomposition::solve");
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[perm_[i]];
    for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
    x[i] = s;
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= lu_(i, j) * x[j];
    x[i] = s / lu_(i, i);
  }
  return x;
}

Matrix LuDecomposition::inverse() const {
  const std::size_t n = lu_.rows();
  Matrix inv(n, n);
  Vector e(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    e[c] = 1.0;
    inv.set_column(c, solve(e));
    e[c] = 0.0;
  }
  return inv;
}

double LuDecomposition::condition_number() const {
  if (singular_) return std::numeric_limits<double>::infinity();
  return norm1_ * norm1(inverse());
}

}  // namespace sgf
