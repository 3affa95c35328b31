#pragma once

#include "ilab/eigen.hpp"
#include "ilab/kpp.hpp"
#include "ilab/liouville.hpp"

#include <json.hpp>

#include <cctype>

extern char** environ;

namespace ilab::config {

using json = nlohmann::json;

inline const char* kEnvPrefix = "ILAB_";

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"solve", "eigen", "kpp", "liouville", "oracle-check"};
  return c;
}

inline json defaults(const std::string& command) {
  json j = {
      {"operator", {{"gamma", 0.0}, {"scheme", "flux"}, {"q", {{"type", "zero"}}}, {"c", {{"type", "zero"}}}}},
      {"domain",
       {{"dim", 1},
        {"shape", {{"type", "ball"}, {"center", {0.0}}, {"radius", 1.0}}},
        {"h", 0.02},
        {"stencil_radius", 1},
        {"directions", "axis_diagonal"}}},
      {"solver",
       {{"tol_residual", 1e-8},
        {"max_iters", 200000},
        {"cfl_safety", 0.9},
        {"sigma", 0.0},
        {"blowup_cap", 1e6},
        {"gradient_floor", 0.1},
        {"max_outer", 400}}},
      {"output", {{"field", "field.csv"}, {"trace", "trace.csv"}, {"meta", "meta.json"}}},
  };
  json& p = j["problem"];
  if (command == "solve") {
    p = {{"boundary", {{"type", "zero"}}},
         {"rhs", {{"type", "zero"}}},
         {"initial", {{"type", "zero"}}},
         {"reaction", {{"type", "none"}}}};
  } else if (command == "eigen") {
    p = {{"bracket_tol", -1.0}, {"check_every", 200}, {"max_bisections", 200}};
    j["operator"]["gamma"] = 2.0;
    j["domain"]["h"] = 0.005;
    j["solver"]["max_iters"] = 2000000;
  } else if (command == "kpp") {
    p = {{"mode", "whole_space"},
         {"nonlinearity", {{"type", "kpp"}}},
         {"drift", {{"type", "zero"}}},
         {"radii", {5.0, 10.0, 20.0}},
         {"bump", {{"epsilon", 0.2}, {"delta", 0.5}, {"scale", 1.0}}},
         {"cauchy_tol", 1e-2},
         {"envelope", {{"type", "constant"}, {"value", 1.0}}},
         {"threshold", 1e-3}};
    j["domain"]["h"] = 0.1;
  } else if (command == "liouville") {
    p = {{"experiment", "theta"},
         {"alpha_test", -0.5},
         {"epsilon", 1.0},
         {"beta", 1.0},
         {"radii", {4.0, 8.0, 16.0, 32.0}},
         {"h", 1.0 / 64},
         {"threshold", 1e-3},
         {"c", {{"type", "constant"}, {"value", -8.0}}},
         {"seed_field", {{"type", "bump"}, {"epsilon", 1.0}, {"amp", 2.0}}},
         {"kappa", 1.0},
         {"drift", {{"type", "zero"}}},
         {"compact_radius", 1.0},
         {"delta0", 0.1}};
    j["solver"]["max_iters"] = 2000000;
  } else if (command == "oracle-check") {
    p = {{"h", 0.02}, {"levels", 2}, {"gammas", {0.0, 1.0, 2.0}}};
  } else {
    throw Error(Errc::invalid_argument, "unknown command '" + command + "'");
  }
  return j;
}

inline json parse_scalar_text(const std::string& v) {
  try {
    return json::parse(v);
  } catch (const json::parse_error&) {
    return json(v);
  }
}

// ILAB_SOLVER__TOL_RESIDUAL=1e-6 sets /solver/tol_residual; "__" separates levels.
inline void apply_env(json& cfg, char** env = environ) {
  const std::string pre = kEnvPrefix;
  std::vector<std::pair<std::string, std::string>> items;
  for (char** e = env; e && *e; ++e) {
    const std::string kv = *e;
    if (kv.rfind(pre, 0) != 0) continue;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    items.emplace_back(kv.substr(pre.size(), eq - pre.size()), kv.substr(eq + 1));
  }
  std::sort(items.begin(), items.end());
  for (const auto& [key, val] : items) {
    std::string ptr;
    std::size_t b = 0;
    while (b <= key.size()) {
      auto e = key.find("__", b);
      if (e == std::string::npos) e = key.size();
      std::string part = key.substr(b, e - b);
      for (auto& ch : part) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      ptr += "/" + part;
      b = e + 2;
    }
    cfg[json::json_pointer(ptr)] = parse_scalar_text(val);
  }
}

inline json resolve(const std::string& command, const json& user, char** env = environ) {
  json cfg = defaults(command);
  cfg.merge_patch(user);
  apply_env(cfg, env);
  cfg["command"] = command;
  return cfg;
}

inline Point point_of(const json& j, int dim, const char* what) {
  Point p{0, 0, 0};
  if (j.is_number()) {
    for (int c = 0; c < dim; ++c) p[c] = j.get<double>();
    return p;
  }
  if (!j.is_array() || static_cast<int>(j.size()) < dim)
    throw Error(Errc::invalid_argument, std::string(what) + " needs " + std::to_string(dim) + " coordinates");
  for (int c = 0; c < dim; ++c) p[c] = j[c].get<double>();
  return p;
}

inline double num(const json& j, const char* key, double def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number()) throw Error(Errc::invalid_argument, std::string("'") + key + "' must be a number");
  return j[key].get<double>();
}

inline Sampler scalar_sampler(const json& j, int dim) {
  const std::string t = j.value("type", "zero");
  if (t == "zero") return Sampler::constant(0.0);
  if (t == "constant") return Sampler::constant(num(j, "value", 0.0));
  const Point c = j.contains("center") ? point_of(j["center"], dim, "center") : Point{0, 0, 0};
  if (t == "quadratic") {
    const double a = num(j, "scale", 1.0);
    return Sampler([a, c, dim](const Point& x) { const double r = norm(sub(x, c), dim); return a * r * r; }, t);
  }
  if (t == "gaussian") {
    const double A = num(j, "amp", 1.0), w = num(j, "width", 1.0);
    if (!(w > 0)) throw Error(Errc::invalid_argument, "gaussian width must be positive");
    return Sampler([A, w, c, dim](const Point& x) { const double r = norm(sub(x, c), dim); return A * std::exp(-r * r / (w * w)); }, t);
  }
  if (t == "aronsson") {
    if (dim < 2) throw Error(Errc::invalid_argument, "aronsson data needs dim >= 2");
    return Sampler([](const Point& x) { return std::pow(std::abs(x[0]), 4.0 / 3) - std::pow(std::abs(x[1]), 4.0 / 3); }, t);
  }
  if (t == "affine") {
    const Point a = j.contains("coeffs") ? point_of(j["coeffs"], dim, "coeffs") : Point{0, 0, 0};
    const double b = num(j, "offset", 0.0);
    return Sampler([a, b, dim](const Point& x) { return b + dot(a, x, dim); }, t);
  }
  if (t == "clamped_radius") {
    const double s = num(j, "scale", 1.0), cap = num(j, "cap", 1.0);
    return Sampler([s, cap, c, dim](const Point& x) { return s * std::min(cap, norm(sub(x, c), dim)); }, t);
  }
  if (t == "bump") {
    const double e = num(j, "epsilon", 1.0), A = num(j, "amp", 1.0);
    if (!(e > 0)) throw Error(Errc::invalid_argument, "bump epsilon must be positive");
    const Sampler b = bump_sampler(c, e, dim);
    return Sampler([b, A](const Point& x) { return A * b(x); }, t);
  }
  if (t == "power") {
    const double a = num(j, "alpha", 1.0), s = num(j, "scale", 1.0);
    return Sampler([a, s, c, dim](const Point& x) { return s * std::pow(norm(sub(x, c), dim), a); }, t);
  }
  throw Error(Errc::invalid_argument, "unknown scalar sampler type '" + t + "'");
}

inline VectorSampler vector_sampler(const json& j, int dim) {
  const std::string t = j.value("type", "zero");
  if (t == "zero") return {};
  if (t == "constant") {
    const Point v = point_of(j.at("value"), dim, "value");
    return VectorSampler([v](const Point&) { return v; }, t);
  }
  if (t == "radial_decay") {
    const double k = num(j, "k", 1.0);
    return VectorSampler([k, dim](const Point& x) {
      const double r2 = dot(x, x, dim);
      Point q{0, 0, 0};
      for (int c = 0; c < dim; ++c) q[c] = k * x[c] / (1.0 + r2);
      return q;
    }, t);
  }
  if (t == "inward") {
    const double kap = num(j, "kappa", 1.0), e = num(j, "epsilon", 1.0);
    return VectorSampler([kap, e, dim](const Point& x) {
      const double r = std::max(norm(x, dim), e);
      Point q{0, 0, 0};
      for (int c = 0; c < dim; ++c) q[c] = -kap * x[c] / r;
      return q;
    }, t);
  }
  throw Error(Errc::invalid_argument, "unknown vector sampler type '" + t + "'");
}

inline DriftSpec drift_spec(const json& j, int dim) {
  const std::string t = j.value("type", "zero");
  DriftSpec d = DriftSpec::none();
  d.q = vector_sampler(j, dim);
  if (t == "zero") return d;
  if (t == "radial_decay") {
    const double k = std::abs(num(j, "k", 1.0));
    d.vanishing = true;
    d.env = [k](double r) { return r < 1.0 ? 0.5 * k : k * r / (1.0 + r * r); };
  } else if (t == "constant") {
    const double m = norm(d.q(Point{0, 0, 0}), dim);
    d.vanishing = false;
    d.env = [m](double) { return m; };
  } else {
    const double kap = std::abs(num(j, "kappa", 1.0));
    d.vanishing = false;
    d.env = [kap](double) { return kap; };
  }
  return d;
}

inline Shape shape_of(const json& j, int dim) {
  const std::string t = j.value("type", "ball");
  if (t == "ball") {
    Ball b;
    b.center = j.contains("center") ? point_of(j["center"], dim, "center") : Point{0, 0, 0};
    b.radius = num(j, "radius", 1.0);
    return b;
  }
  if (t == "annulus") {
    Annulus a;
    a.center = j.contains("center") ? point_of(j["center"], dim, "center") : Point{0, 0, 0};
    a.r_in = num(j, "r_in", 0.5);
    a.r_out = num(j, "r_out", 1.0);
    return a;
  }
  if (t == "box") {
    Box b;
    b.lo = point_of(j.at("lo"), dim, "lo");
    b.hi = point_of(j.at("hi"), dim, "hi");
    return b;
  }
  throw Error(Errc::invalid_argument, "unknown shape type '" + t + "'");
}

inline DirectionSet directions_of(const std::string& s) {
  if (s == "axis") return DirectionSet::Axis;
  if (s == "axis_diagonal") return DirectionSet::AxisDiagonal;
  if (s == "full") return DirectionSet::Full;
  throw Error(Errc::invalid_argument, "unknown direction set '" + s + "'");
}

inline Scheme scheme_of(const std::string& s) {
  if (s == "flux") return Scheme::Flux;
  if (s == "product") return Scheme::Product;
  throw Error(Errc::invalid_argument, "unknown scheme '" + s + "'");
}

inline int dim_of(const json& cfg) {
  const int d = cfg.at("domain").value("dim", 1);
  if (d < 1 || d > 3) throw Error(Errc::invalid_argument, "domain.dim must be 1, 2 or 3");
  return d;
}

// Lattice-aligned grid covering the shape's bounding box.
inline Grid grid_of(const json& cfg, const Shape& shape) {
  const json& d = cfg.at("domain");
  const int dim = dim_of(cfg);
  const double h = num(d, "h", 0.02);
  if (!(h > 0)) throw Error(Errc::invalid_argument, "domain.h must be positive");
  Point lo, hi;
  detail::shape_bbox(shape, dim, lo, hi);
  double a = INFINITY, b = -INFINITY;
  for (int c = 0; c < dim; ++c) {
    a = std::min(a, lo[c]);
    b = std::max(b, hi[c]);
  }
  const double ga = h * std::floor(a / h + 1e-9), gb = h * std::ceil(b / h - 1e-9);
  return Grid::cube(dim, ga, gb, h, d.value("stencil_radius", 1), directions_of(d.value("directions", "axis_diagonal")));
}

inline MaskPtr mask_of(const json& cfg) {
  const int dim = dim_of(cfg);
  const Shape s = shape_of(cfg.at("domain").at("shape"), dim);
  if (!detail::shape_valid(s)) throw Error(Errc::invalid_argument, "domain.shape parameters are invalid");
  return build_mask(grid_of(cfg, s), s);
}

inline CoefficientSet coeffs_of(const json& cfg) {
  const json& o = cfg.at("operator");
  const int dim = dim_of(cfg);
  CoefficientSet cs;
  cs.gamma = num(o, "gamma", 0.0);
  cs.scheme = scheme_of(o.value("scheme", "flux"));
  cs.q = vector_sampler(o.value("q", json{{"type", "zero"}}), dim);
  const json cj = o.value("c", json{{"type", "zero"}});
  if (cj.value("type", "zero") != "zero") cs.c = scalar_sampler(cj, dim);
  cs.validate();
  return cs;
}

inline SolverConfig solver_of(const json& cfg, int workers) {
  const json& s = cfg.at("solver");
  SolverConfig sc;
  sc.tol_residual = num(s, "tol_residual", sc.tol_residual);
  sc.max_iters = s.value("max_iters", sc.max_iters);
  sc.cfl_safety = num(s, "cfl_safety", sc.cfl_safety);
  sc.sigma = num(s, "sigma", sc.sigma);
  sc.blowup_cap = num(s, "blowup_cap", sc.blowup_cap);
  sc.gradient_floor = num(s, "gradient_floor", sc.gradient_floor);
  sc.max_outer = s.value("max_outer", sc.max_outer);
  sc.workers = workers;
  sc.validate();
  return sc;
}

inline Nonlinearity nonlinearity_of(const json& j, double gamma, int dim) {
  const std::string t = j.value("type", "kpp");
  Nonlinearity n;
  if (t == "kpp") n = Nonlinearity::kpp(gamma);
  else if (t == "zero") n = Nonlinearity::zero();
  else if (t == "absorption") n = Nonlinearity::absorption(gamma);
  else if (t == "power_law")
    n = Nonlinearity::power_law(num(j, "alpha", 1.0), scalar_sampler(j.value("a", json{{"type", "constant"}, {"value", 1.0}}), dim),
                                scalar_sampler(j.value("b", json{{"type", "constant"}, {"value", 1.0}}), dim));
  else if (t == "logistic")
    n = Nonlinearity::logistic(gamma, scalar_sampler(j.value("a", json{{"type", "constant"}, {"value", 1.0}}), dim));
  else throw Error(Errc::invalid_argument, "unknown nonlinearity type '" + t + "'");
  n.M = num(j, "M", n.M);
  n.M1 = num(j, "M1", std::min(n.M1, n.M));
  return n;
}

inline KppConfig kpp_config_of(const json& cfg, int workers, std::uint64_t seed) {
  const json& p = cfg.at("problem");
  const json& d = cfg.at("domain");
  KppConfig k;
  k.gamma = num(cfg.at("operator"), "gamma", 0.0);
  k.scheme = scheme_of(cfg.at("operator").value("scheme", "flux"));
  k.dim = dim_of(cfg);
  k.h = num(d, "h", 0.1);
  k.stencil_radius = d.value("stencil_radius", 1);
  k.directions = directions_of(d.value("directions", "axis_diagonal"));
  k.solver = solver_of(cfg, workers);
  const json b = p.value("bump", json::object());
  k.bump_epsilon = num(b, "epsilon", k.bump_epsilon);
  k.bump_delta = num(b, "delta", k.bump_delta);
  k.bump_scale = num(b, "scale", k.bump_scale);
  if (b.contains("center")) k.bump_center = point_of(b["center"], k.dim, "bump.center");
  k.cauchy_tol = num(p, "cauchy_tol", k.cauchy_tol);
  k.seed = seed;
  if (!(k.gamma >= 0 && k.gamma <= 2)) throw Error(Errc::invalid_argument, "gamma must lie in [0,2]");
  if (!(k.h > 0)) throw Error(Errc::invalid_argument, "domain.h must be positive");
  return k;
}

inline std::vector<double> radii_of(const json& p) {
  std::vector<double> r = p.value("radii", std::vector<double>{});
  if (r.empty()) throw Error(Errc::invalid_argument, "problem.radii is empty");
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(r[i] > 0)) throw Error(Errc::invalid_argument, "radii must be positive");
    if (i && !(r[i] > r[i - 1])) throw Error(Errc::invalid_argument, "radii must be increasing");
  }
  return r;
}

inline ExperimentConfig experiment_of(const json& cfg, int workers) {
  const json& p = cfg.at("problem");
  ExperimentConfig e;
  e.gamma = num(cfg.at("operator"), "gamma", 0.0);
  e.scheme = scheme_of(cfg.at("operator").value("scheme", "flux"));
  e.alpha_test = num(p, "alpha_test", e.alpha_test);
  e.epsilon = num(p, "epsilon", e.epsilon);
  e.beta = num(p, "beta", e.beta);
  e.radii = radii_of(p);
  e.h = num(p, "h", e.h);
  e.threshold = num(p, "threshold", e.threshold);
  e.solver = solver_of(cfg, workers);
  e.tol = e.solver.tol_residual;
  e.validate();
  return e;
}

}  // namespace ilab::config
