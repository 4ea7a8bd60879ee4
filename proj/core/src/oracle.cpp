// SPDX-License-Identifier: Apache-2.0
#include "sgf/oracle.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <sstream>

#include "sgf/errors.hpp"

namespace sgf {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("oracle spec: '" + key + "' must be a non-negative integer, got '" + value + "'");
  }
}

void normalize_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double n = norm2(row);
    if (n > 0.0)
      for (double& x : row) x /= n;
  }
}

Matrix random_rows(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m = sample_gaussian(rng, rows, cols);
  normalize_rows(m);
  return m;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool is_synthetic(const std::string& kind) {
  return kind == "linear" || kind == "sigmoid-attrs" || kind == "tanh-mix" || kind == "keypoint-bumps";
}

}  // namespace

// --- OracleSpec -----------------------------------------------------------

OracleSpec OracleSpec::parse(const std::string& text, std::size_t default_d, std::size_t default_nc,
                             std::uint64_t default_seed) {
  OracleSpec spec;
  spec.d = default_d;
  spec.n_c = default_nc;
  spec.seed = default_seed;

  const auto colon = text.find(':');
  spec.kind = trim(text.substr(0, colon));
  if (spec.kind.empty()) throw InvalidArgument("oracle spec: missing kind in '" + text + "'");
  std::string rest = colon == std::string::npos ? std::string{} : text.substr(colon + 1);

  while (!rest.empty()) {
    const auto eq = rest.find('=');
    if (eq == std::string::npos) throw InvalidArgument("oracle spec: expected key=value in '" + rest + "'");
    const std::string key = trim(rest.substr(0, eq));
    std::string value;
    if (key == "cmd") {
      value = trim(rest.substr(eq + 1));
      rest.clear();
    } else {
      const auto comma = rest.find(',', eq);
      value = trim(rest.substr(eq + 1, comma == std::string::npos ? std::string::npos : comma - eq - 1));
      rest = comma == std::string::npos ? std::string{} : rest.substr(comma + 1);
    }
    if (key.empty()) throw InvalidArgument("oracle spec: empty key");
    if (key == "d") {
      spec.d = parse_unsigned(key, value);
    } else if (key == "nc" || key == "n_c") {
      spec.n_c = parse_unsigned(key, value);
    } else if (key == "seed") {
      spec.seed = parse_unsigned(key, value);
    } else {
      spec.params[key] = value;
    }
  }
  spec.validate();
  return spec;
}

std::string OracleSpec::canonical() const {
  std::ostringstream out;
  out << kind << ":d=" << d << ",nc=" << n_c << ",seed=" << seed;
  for (const auto& [key, value] : params) {
    if (key != "cmd") out << ',' << key << '=' << value;
  }
  if (auto it = params.find("cmd"); it != params.end()) out << ",cmd=" << it->second;
  return out.str();
}

Digest OracleSpec::digest() const {
  const std::string text = canonical();
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size()) {
    throw std::runtime_error("OracleSpec::digest: SHA-256 failed");
  }
  return out;
}

double OracleSpec::param_or(const std::string& key, double fallback) const {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size() || !std::isfinite(v)) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("oracle spec: '" + key + "' must be a finite number, got '" + it->second + "'");
  }
}

void OracleSpec::validate() const {
  if (!is_synthetic(kind) && kind != "external") {
    throw InvalidArgument("oracle spec: unknown kind '" + kind + "'");
  }
  if (d == 0 || n_c == 0) throw InvalidArgument("oracle spec: d and nc must be >= 1");
  if (kind == "keypoint-bumps" && n_c % 2 != 0) {
    throw InvalidArgument("oracle spec: keypoint-bumps needs an even nc (x, y pairs)");
  }
  if (kind == "external" && params.find("cmd") == params.end()) {
    throw InvalidArgument("oracle spec: external oracle needs cmd=...");
  }
  if (kind == "tanh-mix" && param_or("width", static_cast<double>(d)) < 1.0) {
    throw InvalidArgument("oracle spec: tanh-mix width must be >= 1");
  }
  if (kind == "keypoint-bumps" && !(param_or("width", 1.0) > 0.0)) {
    throw InvalidArgument("oracle spec: keypoint-bumps width must be positive");
  }
}

std::string to_hex(const Digest& d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(d.size() * 2);
  for (auto b : d) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xF]);
  }
  return out;
}

// --- Oracle ---------------------------------------------------------------

Oracle::Oracle(std::size_t d, std::size_t n_c) : d_(d), n_c_(n_c) {
  if (d == 0 || n_c == 0) throw InvalidArgument("Oracle: dimensions must be >= 1");
}

void Oracle::check_latent(ConstSpan z) const {
  if (z.size() != d_) {
    throw InvalidArgument("oracle: expected latent of length " + std::to_string(d_) + ", got " +
                          std::to_string(z.size()));
  }
}

Vector Oracle::eval(ConstSpan z) {
  check_latent(z);
  Vector c = do_eval(z);
  calls_.fetch_add(1);
  return c;
}

std::vector<Vector> Oracle::eval_batch(const std::vector<Vector>& zs) {
  for (const auto& z : zs) check_latent(z);
  auto out = do_eval_batch(zs);
  calls_.fetch_add(zs.size());
  return out;
}

std::vector<Vector> Oracle::do_eval_batch(const std::vector<Vector>& zs) {
  std::vector<Vector> out;
  out.reserve(zs.size());
  for (const auto& z : zs) out.push_back(do_eval(z));
  return out;
}

Matrix Oracle::eval_grad(ConstSpan) const {
  throw UnsupportedOperation("oracle: gradients are not available for this oracle");
}

Digest Oracle::digest() const { return spec_ ? spec_->digest() : Digest{}; }

// --- linear ---------------------------------------------------------------

LinearOracle::LinearOracle(Matrix gamma) : Oracle(gamma.cols(), gamma.rows()), gamma_(std::move(gamma)) {}

Vector LinearOracle::do_eval(ConstSpan z) { return matvec(gamma_, z); }

Matrix LinearOracle::eval_grad(ConstSpan z) const {
  check_latent(z);
  return gamma_;
}

// --- sigmoid-attrs --------------------------------------------------------

SigmoidAttrsOracle::SigmoidAttrsOracle(Matrix a, Vector b, double scale)
    : Oracle(a.cols(), a.rows()), a_(std::move(a)), b_(std::move(b)), scale_(scale) {
  if (b_.size() != a_.rows()) throw InvalidArgument("SigmoidAttrsOracle: offset length mismatch");
}

Vector SigmoidAttrsOracle::do_eval(ConstSpan z) {
  Vector logits = matvec(a_, z);
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] = sigmoid(scale_ * (logits[i] + b_[i]));
  return logits;
}

Matrix SigmoidAttrsOracle::eval_grad(ConstSpan z) const {
  check_latent(z);
  const Vector logits = matvec(a_, z);
  Matrix jac = a_;
  for (std::size_t i = 0; i < jac.rows(); ++i) {
    const double s = sigmoid(scale_ * (logits[i] + b_[i]));
    const double g = scale_ * s * (1.0 - s);
    for (double& x : jac.row(i)) x *= g;
  }
  return jac;
}

// --- tanh-mix -------------------------------------------------------------

TanhMixOracle::TanhMixOracle(Matrix outer, Matrix inner, double gain, double scale)
    : Oracle(inner.cols(), outer.rows()), outer_(std::move(outer)), inner_(std::move(inner)), gain_(gain),
      scale_(scale) {
  if (outer_.cols() != inner_.rows()) throw InvalidArgument("TanhMixOracle: inner/outer width mismatch");
}

Vector TanhMixOracle::do_eval(ConstSpan z) {
  Vector hidden = matvec(inner_, z);
  for (double& h : hidden) h = std::tanh(scale_ * h);
  Vector out = matvec(outer_, hidden);
  for (double& c : out) c = sigmoid(gain_ * c);
  return out;
}

Matrix TanhMixOracle::eval_grad(ConstSpan z) const {
  check_latent(z);
  Vector hidden = matvec(inner_, z);
  Matrix inner_jac = inner_;
  for (std::size_t k = 0; k < hidden.size(); ++k) {
    hidden[k] = std::tanh(scale_ * hidden[k]);
    const double g = scale_ * (1.0 - hidden[k] * hidden[k]);
    for (double& x : inner_jac.row(k)) x *= g;
  }
  const Vector pre = matvec(outer_, hidden);
  Matrix outer_jac = outer_;
  for (std::size_t i = 0; i < pre.size(); ++i) {
    const double s = sigmoid(gain_ * pre[i]);
    const double g = gain_ * s * (1.0 - s);
    for (double& x : outer_jac.row(i)) x *= g;
  }
  return matmul(outer_jac, inner_jac);
}

// --- keypoint-bumps -------------------------------------------------------

KeypointBumpsOracle::KeypointBumpsOracle(Matrix directions, Matrix centers, double box, double height, double width)
    : Oracle(directions.cols(), directions.rows()),
      directions_(std::move(directions)),
      centers_(std::move(centers)),
      box_(box),
      height_(height),
      width_(width) {
  if (centers_.rows() != directions_.rows() || centers_.cols() != directions_.cols()) {
    throw InvalidArgument("KeypointBumpsOracle: centers/directions shape mismatch");
  }
  if (!(width_ > 0.0)) throw InvalidArgument("KeypointBumpsOracle: width must be positive");
}

Vector KeypointBumpsOracle::do_eval(ConstSpan z) {
  Vector out(directions_.rows());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double dist2 = [&] {
      double s = 0.0;
      const auto mu = centers_.row(j);
      for (std::size_t k = 0; k < z.size(); ++k) s += (z[k] - mu[k]) * (z[k] - mu[k]);
      return s;
    }();
    const double arg = dot(directions_.row(j), z) + height_ * std::exp(-dist2 / (2.0 * width_ * width_));
    out[j] = box_ * std::tanh(arg);
  }
  return out;
}

Matrix KeypointBumpsOracle::eval_grad(ConstSpan z) const {
  check_latent(z);
  Matrix jac(directions_.rows(), directions_.cols());
  const double w2 = width_ * width_;
  for (std::size_t j = 0; j < jac.rows(); ++j) {
    const auto mu = centers_.row(j);
    double dist2 = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) dist2 += (z[k] - mu[k]) * (z[k] - mu[k]);
    const double bump = height_ * std::exp(-dist2 / (2.0 * w2));
    const double arg = dot(directions_.row(j), z) + bump;
    const double t = std::tanh(arg);
    const double outer = box_ * (1.0 - t * t);
    auto row = jac.row(j);
    const auto a = directions_.row(j);
    for (std::size_t k = 0; k < z.size(); ++k) row[k] = outer * (a[k] - bump * (z[k] - mu[k]) / w2);
  }
  return jac;
}

// --- factory --------------------------------------------------------------

std::unique_ptr<Oracle> build_oracle(const OracleSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::unique_ptr<Oracle> oracle;

  if (spec.kind == "linear") {
    const double gain = spec.param_or("gain", 1.0);
    Matrix gamma(spec.n_c, spec.d);
    if (spec.param_or("random", 0.0) != 0.0) {
      gamma = random_rows(rng, spec.n_c, spec.d);
    } else {
      for (std::size_t i = 0; i < std::min(spec.n_c, spec.d); ++i) gamma(i, i) = 1.0;
    }
    for (double& x : gamma.values()) x *= gain;
    oracle = std::make_unique<LinearOracle>(std::move(gamma));
  } else if (spec.kind == "sigmoid-attrs") {
    Matrix a = random_rows(rng, spec.n_c, spec.d);
    Vector b = scaled(sample_gaussian(rng, spec.n_c), spec.param_or("bias", 0.0));
    oracle = std::make_unique<SigmoidAttrsOracle>(std::move(a), std::move(b), spec.param_or("scale", 1.0));
  } else if (spec.kind == "tanh-mix") {
    const auto width = static_cast<std::size_t>(spec.param_or("width", static_cast<double>(spec.d)));
    Matrix inner = random_rows(rng, width, spec.d);
    Matrix outer = random_rows(rng, spec.n_c, width);
    oracle = std::make_unique<TanhMixOracle>(std::move(outer), std::move(inner), spec.param_or("gain", 3.0),
                                             spec.param_or("scale", 1.5));
  } else if (spec.kind == "keypoint-bumps") {
    Matrix directions = random_rows(rng, spec.n_c, spec.d);
    Matrix centers = sample_gaussian(rng, spec.n_c, spec.d);
    oracle = std::make_unique<KeypointBumpsOracle>(std::move(directions), std::move(centers),
                                                   spec.param_or("box", 1.0), spec.param_or("height", 1.0),
                                                   spec.param_or("width", 1.0));
  } else {
    oracle = std::make_unique<ExternalOracle>(spec.params.at("cmd"), spec.d, spec.n_c);
  }
  oracle->set_spec(spec);
  return oracle;
}

}  // namespace sgf
