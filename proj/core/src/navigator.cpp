// SPDX-License-Identifier: Apache-2.0
#include "sgf/navigator.hpp"

#include <cmath>

#include "sgf/errors.hpp"

namespace sgf {

namespace {

double linf_distance(ConstSpan a, ConstSpan b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

std::string to_string(InverseMode mode) { return mode == InverseMode::kExact ? "exact" : "neumann"; }

InverseMode inverse_mode_from_string(const std::string& text) {
  if (text == "neumann") return InverseMode::kNeumann;
  if (text == "exact") return InverseMode::kExact;
  throw InvalidArgument("unknown inverse mode '" + text + "' (expected neumann or exact)");
}

void NavConfig::validate() const {
  if (!(step_size > 0.0)) throw InvalidArgument("NavConfig: step size must be positive");
  if (max_steps == 0) throw InvalidArgument("NavConfig: max_steps must be >= 1");
  if (!(converge_tol > 0.0)) throw InvalidArgument("NavConfig: converge_tol must be positive");
  if (!(divergence_bound > 0.0)) throw InvalidArgument("NavConfig: divergence_bound must be positive");
}

nlohmann::json to_json(const NavConfig& cfg) {
  return {{"step_size", cfg.step_size},
          {"neumann_order", cfg.neumann_order},
          {"max_steps", cfg.max_steps},
          {"converge_tol", cfg.converge_tol},
          {"fast", cfg.fast},
          {"final_check", cfg.final_check},
          {"inverse", to_string(cfg.inverse)},
          {"divergence_bound", cfg.divergence_bound},
          {"max_condition", cfg.max_condition}};
}

NavConfig nav_config_from_json(const nlohmann::json& j) {
  NavConfig cfg;
  cfg.step_size = j.at("step_size").get<double>();
  cfg.neumann_order = j.at("neumann_order").get<std::size_t>();
  cfg.max_steps = j.at("max_steps").get<std::size_t>();
  cfg.converge_tol = j.at("converge_tol").get<double>();
  cfg.fast = j.value("fast", false);
  cfg.final_check = j.value("final_check", false);
  cfg.inverse = inverse_mode_from_string(j.value("inverse", std::string("neumann")));
  cfg.divergence_bound = j.value("divergence_bound", cfg.divergence_bound);
  cfg.max_condition = j.value("max_condition", cfg.max_condition);
  return cfg;
}

nlohmann::json to_json(const NavTrace& trace) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : trace.steps) {
    steps.push_back({{"i", s.i}, {"z", s.z}, {"c", s.c}, {"dz", s.dz}, {"dist", s.dist}});
  }
  nlohmann::json j = {{"config", to_json(trace.config)},
                      {"c0", trace.c0},
                      {"c1", trace.c1},
                      {"converged", trace.converged},
                      {"oracle_calls", trace.oracle_calls},
                      {"steps", steps}};
  if (trace.verified_c) j["verified_c"] = *trace.verified_c;
  return j;
}

NavTrace trace_from_json(const nlohmann::json& j) {
  NavTrace trace;
  trace.config = nav_config_from_json(j.at("config"));
  trace.c0 = j.at("c0").get<Vector>();
  trace.c1 = j.at("c1").get<Vector>();
  trace.converged = j.at("converged").get<bool>();
  trace.oracle_calls = j.at("oracle_calls").get<std::size_t>();
  for (const auto& s : j.at("steps")) {
    trace.steps.push_back(NavStep{s.at("i").get<std::size_t>(), s.at("z").get<Vector>(), s.at("c").get<Vector>(),
                                  s.at("dz").get<Vector>(), s.at("dist").get<double>()});
  }
  if (j.contains("verified_c")) trace.verified_c = j.at("verified_c").get<Vector>();
  return trace;
}

NavigationDiverged::NavigationDiverged(const std::string& what, NavTrace partial)
    : std::runtime_error(what), partial_(std::move(partial)) {}

Vector neumann_apply(const LinearOperator& apply_x, ConstSpan v, std::size_t m) {
  Vector sum(v.begin(), v.end());
  Vector term(v.begin(), v.end());
  for (std::size_t j = 1; j <= m; ++j) {
    term = apply_x(term);
    axpy(1.0, term, sum);
  }
  return sum;
}

Vector surrogate_field(const AuxiliaryMapping& f, ConstSpan z, ConstSpan c, ConstSpan target_delta,
                       const NavConfig& cfg) {
  if (z.size() != f.latent_dim() || c.size() != f.cond_dim() || target_delta.size() != f.cond_dim()) {
    throw InvalidArgument("surrogate_field: dimension mismatch");
  }
  const Vector v0 = f.jvp_c(z, c, target_delta);
  if (cfg.inverse == InverseMode::kNeumann) {
    return neumann_apply([&](ConstSpan dir) { return f.jvp_z(z, c, dir); }, v0, cfg.neumann_order);
  }
  Matrix system = jacobian_z(f, z, c);
  for (double& x : system.values()) x = -x;
  for (std::size_t i = 0; i < system.rows(); ++i) system(i, i) += 1.0;
  const LuDecomposition lu(std::move(system));
  const double cond = lu.condition_number();
  if (lu.singular() || !(cond <= cfg.max_condition)) {
    throw SingularField("surrogate_field: I - dF/dz is singular (condition number " + std::to_string(cond) + ")");
  }
  return lu.solve(v0);
}

NavTrace navigate(const AuxiliaryMapping& f, Oracle& oracle, ConstSpan z0, ConstSpan c1, const NavConfig& cfg) {
  cfg.validate();
  const std::size_t d = f.latent_dim();
  const std::size_t n_c = f.cond_dim();
  if (z0.size() != d || c1.size() != n_c || oracle.latent_dim() != d || oracle.cond_dim() != n_c) {
    throw InvalidArgument("navigate: dimension mismatch between F, oracle, z0 and c1");
  }

  NavTrace trace;
  trace.config = cfg;
  trace.c1.assign(c1.begin(), c1.end());
  trace.c0 = oracle.eval(z0);
  trace.oracle_calls = 1;

  Vector delta_c = subtract(c1, trace.c0);
  for (double& x : delta_c) x *= cfg.step_size;

  Vector z(z0.begin(), z0.end());
  Vector c = trace.c0;
  double dist = linf_distance(c, c1);
  trace.steps.push_back(NavStep{0, z, c, Vector(d, 0.0), dist});

  if (dist <= cfg.converge_tol) {
    trace.converged = true;
    return trace;
  }

  for (std::size_t i = 1; i <= cfg.max_steps; ++i) {
    Vector dz = surrogate_field(f, z, c, delta_c, cfg);
    Vector next = add(z, dz);
    if (!all_finite(dz) || !all_finite(next) || norm2(next) > cfg.divergence_bound) {
      throw NavigationDiverged("navigate: step " + std::to_string(i) + " left the finite/bounded region",
                               std::move(trace));
    }
    z = std::move(next);
    if (cfg.fast) {
      c = trace.c0;
      axpy(static_cast<double>(i), delta_c, c);
    } else {
      c = oracle.eval(z);
      ++trace.oracle_calls;
    }
    dist = linf_distance(c, c1);
    trace.steps.push_back(NavStep{i, z, c, std::move(dz), dist});
    if (dist <= cfg.converge_tol) {
      trace.converged = true;
      break;
    }
  }

  if (cfg.fast && cfg.final_check) {
    trace.verified_c = oracle.eval(z);
    ++trace.oracle_calls;
  }
  return trace;
}

std::size_t count_oracle_calls(const NavTrace& trace) { return trace.oracle_calls; }

}  // namespace sgf
