#pragma once

#include "ilab/dirichlet.hpp"
#include "ilab/oracles.hpp"

#include <optional>
#include <random>

namespace ilab {

// Reaction f(x,s) of the whole-space problem L u + f(x,u) = 0 plus the levels and
// bounds the monotone construction needs.
struct Nonlinearity {
  std::function<double(const Point&, double)> f;
  Sampler ell;               // limit of f(x,s)/s^alpha_exp as s -> 0
  double M = 1.0;            // supersolution level, f(x,M) <= 0
  double M1 = 1.0;           // asymptotic level
  double alpha_exp = 0.0;    // small-s exponent; 0 means 3 - gamma
  double lip_bound = 0.0;    // Lipschitz bound of f(x,.) on [0,M]; 0 means estimate
  bool lipschitz_at_zero = true;
  std::string name;

  Reaction reaction(double shift = 0.0) const {
    Reaction r;
    auto g = f;
    r.f = [g, shift](const Point& x, double s) { return g(x, s + shift); };
    r.name = name;
    return r;
  }

  double exponent(double gamma) const { return alpha_exp > 0.0 ? alpha_exp : 3.0 - gamma; }

  // Spot checks f(x,0) = 0 and f(x,M) <= 0 at random points of [-R,R]^dim.
  void validate(double gamma, int dim, double R, std::uint64_t seed = 1, int probes = 64) const {
    if (!f) throw Error(Errc::invalid_argument, "nonlinearity has no f");
    if (!(M > 0.0) || !(M1 > 0.0) || M1 > M) throw Error(Errc::invalid_argument, "levels must satisfy 0 < M1 <= M");
    const double a = exponent(gamma);
    if (!(a > 0.0 && a <= 3.0 - gamma + 1e-12))
      throw Error(Errc::invalid_argument, "alpha_exp must lie in (0, 3-gamma]");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-R, R);
    for (int k = 0; k < probes; ++k) {
      Point x{0, 0, 0};
      for (int c = 0; c < dim; ++c) x[c] = U(rng);
      const double f0 = f(x, 0.0), fM = f(x, M);
      if (!(std::abs(f0) <= 1e-12)) throw Error(Errc::precondition, "f(x,0) != 0 at " + format_point(x, dim));
      if (!(fM <= 1e-12)) throw Error(Errc::precondition, "f(x,M) > 0 at " + format_point(x, dim));
    }
  }

  // s^{3-gamma}(1 - s).
  static Nonlinearity kpp(double gamma) {
    Nonlinearity n;
    const Reaction r = reactions::kpp(gamma);
    n.f = r.f;
    n.ell = Sampler::constant(1.0);
    n.name = "kpp";
    return n;
  }

  static Nonlinearity zero() {
    Nonlinearity n;
    n.f = [](const Point&, double) { return 0.0; };
    n.ell = Sampler::constant(0.0);
    n.name = "zero";
    return n;
  }

  // -s^{3-gamma}: pure absorption.
  static Nonlinearity absorption(double gamma) {
    Nonlinearity n;
    const double p = 3.0 - gamma;
    n.f = [p](const Point&, double s) { return -reactions::spow(s, p); };
    n.ell = Sampler::constant(-1.0);
    n.name = "absorption";
    return n;
  }

  // s^alpha (a(x) - b(x) s^{4-alpha}); case (B) when alpha < 3 - gamma.
  static Nonlinearity power_law(double alpha, Sampler a, Sampler b) {
    Nonlinearity n;
    n.f = [alpha, a, b](const Point& x, double s) {
      if (s < 0) return -std::pow(-s, alpha) * (a(x) + b(x) * std::pow(-s, 4.0 - alpha));
      return std::pow(s, alpha) * (a(x) - b(x) * std::pow(s, 4.0 - alpha));
    };
    n.ell = a;
    n.alpha_exp = alpha;
    n.lipschitz_at_zero = alpha >= 1.0;
    n.name = "power_law";
    return n;
  }

  // s^{3-gamma}(a(x) - s).
  static Nonlinearity logistic(double gamma, Sampler a) {
    Nonlinearity n;
    const double p = 3.0 - gamma;
    n.f = [p, a](const Point& x, double s) {
      if (s < 0) return -std::pow(-s, p) * (a(x) - s);
      return std::pow(s, p) * (a(x) - s);
    };
    n.ell = a;
    n.name = "logistic";
    return n;
  }
};

// Sampled sup over s in [lo, hi] of |df/ds|, over the given points.
inline double lipschitz_estimate(const std::function<double(const Point&, double)>& f, double lo, double hi,
                                 const std::vector<Point>& xs, int ns = 400) {
  double L = 0.0;
  const double ds = (hi - lo) / ns;
  for (const Point& x : xs) {
    double prev = f(x, lo);
    for (int k = 1; k <= ns; ++k) {
      const double v = f(x, lo + k * ds);
      L = std::max(L, std::abs(v - prev) / ds);
      prev = v;
    }
  }
  return L;
}

// Drift with a declared radial envelope |q(x)| <= env(|x|).
struct DriftSpec {
  VectorSampler q;
  bool vanishing = true;
  std::function<double(double)> env;

  static DriftSpec none() {
    DriftSpec d;
    d.env = [](double) { return 0.0; };
    return d;
  }

  double envelope(double r) const { return env ? env(r) : (q ? INFINITY : 0.0); }

  void validate(int dim, double R, std::uint64_t seed = 2, int probes = 64) const {
    if (!q) return;
    if (!env) throw Error(Errc::invalid_argument, "drift needs an envelope");
    double prev = INFINITY;
    for (int k = 0; k <= 200; ++k) {
      const double r = R * k / 200.0, e = env(r);
      if (!(e <= prev + 1e-12)) throw Error(Errc::invalid_argument, "drift envelope must be non-increasing");
      prev = e;
    }
    if (vanishing && !(env(1e8) < 1e-6)) throw Error(Errc::invalid_argument, "drift envelope does not vanish");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-R, R);
    for (int k = 0; k < probes; ++k) {
      Point x{0, 0, 0};
      for (int c = 0; c < dim; ++c) x[c] = U(rng);
      if (!(norm(q(x), dim) <= env(norm(x, dim)) + 1e-12))
        throw Error(Errc::precondition, "drift exceeds its envelope at " + format_point(x, dim));
    }
  }
};

struct GrowthEnvelope {
  Sampler V;
  double beta = 1.0;
  double inf_V = 1.0;
};

struct KppConfig {
  double gamma = 0.0;
  Scheme scheme = Scheme::Flux;
  int dim = 1;
  double h = 0.1;
  int stencil_radius = 1;
  DirectionSet directions = DirectionSet::AxisDiagonal;
  SolverConfig solver{};
  double bump_epsilon = 0.2;
  double bump_delta = 0.1;
  double bump_scale = 1.0;  // the sandwich uses bump_scale * psi
  std::optional<Point> bump_center;
  std::vector<double> shift_schedule{1e-1, 1e-2, 1e-3};
  double cauchy_tol = 1e-2;
  std::uint64_t seed = 1;

  CoefficientSet coeffs(const DriftSpec& d) const {
    CoefficientSet cs;
    cs.gamma = gamma;
    cs.scheme = scheme;
    cs.q = d.q;
    return cs;
  }
};

// Lattice-aligned grid covering [-n, n]^dim.
inline Grid ball_grid(double n, const KppConfig& cfg) {
  const double L = cfg.h * std::ceil(n / cfg.h - 1e-9);
  return Grid::cube(cfg.dim, -L, L, cfg.h, cfg.stencil_radius, cfg.directions);
}

inline std::optional<std::size_t> node_at(const Grid& g, const Point& x) {
  Offset i{0, 0, 0};
  for (int c = 0; c < g.dim; ++c) {
    const double t = (x[c] - g.origin[c]) / g.h;
    i[c] = static_cast<int>(std::llround(t));
    if (std::abs(t - i[c]) > 1e-6) return std::nullopt;
  }
  if (!g.contains(i)) return std::nullopt;
  return g.index(i);
}

struct BumpCertificate {
  ScalarField field;                 // psi(eps (x - z)) on the mask it was certified on
  Point center{0, 0, 0};
  double epsilon = 0.0, delta = 0.0;
  double min_margin = INFINITY;      // min over certified nodes of L_h psi + delta psi^{3-gamma}
  std::vector<Point> failing;
  bool pass = false;
};

inline Sampler bump_sampler(const Point& z, double eps, int dim) {
  const RadialProfile p = RadialProfile::bump(eps);
  return Sampler([p, z, dim](const Point& x) { return p.value(norm(sub(x, z), dim)); }, "bump");
}

namespace detail {

// Certificate on an arbitrary mask: nodes where psi = 0 are skipped, since there
// L_h psi >= 0 for any nonnegative field.
inline BumpCertificate certify_bump(const MaskPtr& mask, const Point& z, double eps, double delta,
                                    const CoefficientSet& coeffs) {
  const int dim = mask->grid.dim;
  BumpCertificate out;
  out.center = z;
  out.epsilon = eps;
  out.delta = delta;
  out.field = sample(bump_sampler(z, eps, dim), mask);
  const ScalarField Lh = apply_L(out.field, coeffs);
  const double p = 3.0 - coeffs.gamma;
  for (auto i : mask->interior) {
    const double v = out.field.values[i];
    if (!(v > 0.0)) continue;
    const double m = Lh.values[i] + delta * std::pow(v, p);
    out.min_margin = std::min(out.min_margin, m);
    if (!(m > 0.0)) out.failing.push_back(mask->grid.coord(i));
  }
  out.pass = out.failing.empty();
  return out;
}

}  // namespace detail

// Bump psi(x) = exp(-1/(1 - |eps (x-z)|^2)) on Ball(z, 1/eps) with a node-wise check of
// L_h psi + delta psi^{3-gamma} > 0.
inline BumpCertificate bump_subsolution(const Grid& grid, const Point& z, double eps, double delta,
                                        const CoefficientSet& coeffs, const DriftSpec& drift = DriftSpec::none()) {
  if (!(eps > 0.0) || !(delta > 0.0)) throw Error(Errc::invalid_argument, "bump needs eps > 0 and delta > 0");
  const int dim = grid.dim;
  if (drift.q && !(drift.envelope(std::max(0.0, norm(z, dim) - 1.0 / eps)) <= eps))
    throw Error(Errc::precondition, "drift envelope exceeds eps on the bump ball at " + format_point(z, dim));
  const MaskPtr m = build_mask(grid, Ball{z, 1.0 / eps});
  return detail::certify_bump(m, z, eps, delta, coeffs);
}

struct KppBallResult {
  MonotoneReport iteration;          // last shift stage
  ScalarField field;
  BumpCertificate bump;              // certified on this ball's mask
  double sandwich_low = INFINITY;    // min (u - scale * psi)
  double sandwich_high = INFINITY;   // min (start - u)
  std::vector<double> stage_shift, stage_center;
  double center_value = 0.0;
};

namespace detail {

inline Point default_bump_center(const DriftSpec& drift, double eps, int dim) {
  Point z{0, 0, 0};
  if (!drift.q) return z;
  // Smallest |z| along the first axis with env <= eps on the whole bump ball.
  double r = 0.0;
  while (drift.envelope(std::max(0.0, r - 1.0 / eps)) > eps && r < 1e6) r += 0.25;
  z[0] = r;
  (void)dim;
  return z;
}

inline double center_value(const ScalarField& u) {
  const auto& g = u.mask->grid;
  const auto idx = node_at(g, Point{0, 0, 0});
  return idx ? u.values[*idx] : u.interior_max();
}

}  // namespace detail

// Monotone iteration from the constant `start` with zero Dirichlet data on Ball(0, n),
// followed by the sandwich check against the certified bump.
inline KppBallResult solve_kpp_ball(double n, const Nonlinearity& nl, const DriftSpec& drift, const KppConfig& cfg,
                                    double start = -1.0) {
  if (!(n > 0.0)) throw Error(Errc::invalid_argument, "ball radius must be positive");
  const double top = start > 0.0 ? start : nl.M;
  nl.validate(cfg.gamma, cfg.dim, n, cfg.seed);
  drift.validate(cfg.dim, n, cfg.seed + 1);
  const CoefficientSet cs = cfg.coeffs(drift);
  const Grid g = ball_grid(n, cfg);
  const MaskPtr mask = build_mask(g, Ball{{0, 0, 0}, n});

  KppBallResult out;
  const double eps = cfg.bump_epsilon;
  const Point z = cfg.bump_center ? *cfg.bump_center : detail::default_bump_center(drift, eps, cfg.dim);
  if (norm(z, cfg.dim) + 1.0 / eps > n + 1e-9)
    throw Error(Errc::precondition, "bump ball of radius " + std::to_string(1.0 / eps) + " does not fit in radius " +
                                        std::to_string(n));

  std::vector<Point> xs;
  for (std::size_t s = 0; s < mask->interior.size(); s += std::max<std::size_t>(1, mask->interior.size() / 64))
    xs.push_back(g.coord(mask->interior[s]));

  // The scaled bump is a subsolution of the full problem when f >= delta s^{3-gamma} on its range.
  const double p = 3.0 - cfg.gamma, kap = cfg.bump_scale;
  for (const Point& x : xs)
    for (int k = 1; k <= 64; ++k) {
      const double s = kap * std::exp(-1.0) * k / 64.0;
      if (nl.f(x, s) < cfg.bump_delta * std::pow(s, p))
        throw Error(Errc::precondition, "f(x,s) < delta s^{3-gamma} below the bump height at " + format_point(x, cfg.dim));
    }
  out.bump = detail::certify_bump(mask, z, eps, cfg.bump_delta, cs);
  // Without a fixed center, move the bump outward where the drift is weaker.
  for (Point zz = z; !out.bump.pass && !cfg.bump_center && drift.q;) {
    zz[0] += 0.25;
    if (zz[0] + 1.0 / eps > n + 1e-9) break;
    BumpCertificate c = detail::certify_bump(mask, zz, eps, cfg.bump_delta, cs);
    if (c.pass) out.bump = std::move(c);
  }
  // A zero scale uses no subsolution, so the lower sandwich is just u >= 0.
  if (!out.bump.pass && kap > 0.0)
    throw Error(Errc::certificate_failed, "bump certificate fails at " + std::to_string(out.bump.failing.size()) +
                                              " nodes, first " + format_point(out.bump.failing.front(), cfg.dim));

  std::vector<double> shifts{0.0};
  if (!nl.lipschitz_at_zero) shifts = cfg.shift_schedule;
  ScalarField u(mask, top);
  for (double sh : shifts) {
    const Reaction F = nl.reaction(sh);
    SolverConfig sc = cfg.solver;
    const double lip = nl.lip_bound > 0.0 && sh == 0.0 && top <= nl.M
                           ? nl.lip_bound
                           : lipschitz_estimate(F.f, 0.0, top, xs);
    if (sc.sigma <= lip) sc.sigma = 1.1 * lip + 1e-12;
    ScalarField u0(mask, top);
    out.iteration = monotone_iteration(F, u0, cs, Sampler::constant(0.0), sc);
    u = out.iteration.final.field;
    out.stage_shift.push_back(sh);
    out.stage_center.push_back(detail::center_value(u));
  }
  const auto& it = out.iteration.final;
  if (it.status == SolveStatus::Diverged || it.status == SolveStatus::Blowup)
    throw Error(Errc::domain_error, std::string("monotone iteration ") + status_name(it.status) + " on radius " +
                                        std::to_string(n));

  const double tol = cfg.solver.tol_residual;
  std::size_t worst = mask->interior.front();
  for (auto i : mask->interior) {
    const double lo = u.values[i] - kap * out.bump.field.values[i];
    if (lo < out.sandwich_low) {
      out.sandwich_low = lo;
      worst = i;
    }
    out.sandwich_high = std::min(out.sandwich_high, top - u.values[i]);
  }
  if (out.sandwich_low < -tol || out.sandwich_high < -tol)
    throw Error(Errc::certificate_failed, "sandwich violated at " + format_point(g.coord(worst), cfg.dim) +
                                              " (lower gap " + std::to_string(out.sandwich_low) + ")");
  out.field = std::move(u);
  out.center_value = detail::center_value(out.field);
  return out;
}

struct RadiusTrace {
  double radius = 0.0;
  double center = 0.0;
  double inner_min = 0.0, inner_max = 0.0;  // over |x| <= radius / 2
  double cauchy = INFINITY;                 // sup gap to the previous radius on its inner half
  double sandwich_low = 0.0;
  double residual = 0.0;                    // final residual sup-norm
  int outer_iterations = 0;
  int inner_sweeps = 0;
  bool descent_ok = true;                   // iterate stack non-increasing within tol
  std::string status;                       // monotone iteration outcome
};

struct WholeSpaceResult {
  ScalarField field;
  Point bump_center{0, 0, 0};  // certified bump of the last radius
  std::vector<RadiusTrace> trace;
  bool converged = false;  // last Cauchy gap <= cauchy_tol
  std::string status;      // "converged" or "inconclusive"
};

namespace detail {

inline void inner_extremes(const ScalarField& u, double r, double& lo, double& hi) {
  const auto& m = *u.mask;
  lo = INFINITY;
  hi = -INFINITY;
  for (auto i : m.interior)
    if (norm(m.grid.coord(i), m.grid.dim) <= r + 1e-12) {
      lo = std::min(lo, u.values[i]);
      hi = std::max(hi, u.values[i]);
    }
}

// sup |a - b| over nodes of a with |x| <= r that also exist in b.
inline double gap_on(const ScalarField& a, const ScalarField& b, double r, Point* where = nullptr) {
  const auto& ma = *a.mask;
  const auto& gb = b.mask->grid;
  double gmax = 0.0;
  for (auto i : ma.interior) {
    const Point x = ma.grid.coord(i);
    if (norm(x, ma.grid.dim) > r + 1e-12) continue;
    const auto j = node_at(gb, x);
    if (!j || b.mask->cls[*j] == NodeClass::Exterior) continue;
    const double d = std::abs(a.values[i] - b.values[*j]);
    if (d > gmax) {
      gmax = d;
      if (where) *where = x;
    }
  }
  return gmax;
}

}  // namespace detail

// Exhaustion by balls of increasing radius, each solved from the constant `start`.
inline WholeSpaceResult solve_kpp_whole_space(const Nonlinearity& nl, const DriftSpec& drift,
                                              const std::vector<double>& radii, KppConfig cfg, double start = -1.0) {
  if (radii.empty()) throw Error(Errc::invalid_argument, "radii schedule is empty");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw Error(Errc::invalid_argument, "radii must be increasing");
  cfg.solver.keep_stack = true;
  WholeSpaceResult out;
  ScalarField prev;
  double prev_r = 0.0;
  for (double n : radii) {
    KppBallResult b = solve_kpp_ball(n, nl, drift, cfg, start);
    RadiusTrace t;
    t.radius = n;
    t.center = b.center_value;
    detail::inner_extremes(b.field, 0.5 * n, t.inner_min, t.inner_max);
    t.sandwich_low = b.sandwich_low;
    if (!b.iteration.final.residual_history.empty()) t.residual = b.iteration.final.residual_history.back();
    t.outer_iterations = b.iteration.outer_iterations;
    t.inner_sweeps = b.iteration.inner_sweeps;
    t.status = status_name(b.iteration.final.status);
    for (double inc : b.iteration.max_increase)
      if (inc > cfg.solver.tol_residual) t.descent_ok = false;
    if (prev.mask) t.cauchy = detail::gap_on(prev, b.field, 0.5 * prev_r);
    out.trace.push_back(t);
    prev = b.field;
    prev_r = n;
    out.bump_center = b.bump.center;
  }
  out.field = prev;
  out.converged = out.trace.size() >= 2 && out.trace.back().cauchy <= cfg.cauchy_tol &&
                  out.trace.back().status == status_name(SolveStatus::Converged);
  out.status = out.converged ? "converged" : "inconclusive";
  return out;
}

struct AsymptoticsReport {
  double min = 0.0, max = 0.0;
  double deficit = 0.0;  // max(0, M1 - min)
  double excess = 0.0;   // max(0, max - M1)
  double margin = 0.0;   // max(|min - M1|, |max - M1|)
  bool pass = false;
};

// Extremes of the field over r_in <= |x| <= r_out against the level M1.
inline AsymptoticsReport asymptotics_check(const ScalarField& u, double M1, double r_in, double r_out, double tol) {
  if (!(r_out >= r_in && r_in >= 0.0)) throw Error(Errc::invalid_argument, "annulus must satisfy 0 <= r_in <= r_out");
  const auto& m = *u.mask;
  AsymptoticsReport r;
  r.min = INFINITY;
  r.max = -INFINITY;
  for (auto i : m.active()) {
    const double d = norm(m.grid.coord(i), m.grid.dim);
    if (d < r_in - 1e-12 || d > r_out + 1e-12) continue;
    r.min = std::min(r.min, u.values[i]);
    r.max = std::max(r.max, u.values[i]);
  }
  if (!std::isfinite(r.min)) throw Error(Errc::invalid_argument, "annulus contains no nodes");
  r.deficit = std::max(0.0, M1 - r.min);
  r.excess = std::max(0.0, r.max - M1);
  r.margin = std::max(std::abs(r.min - M1), std::abs(r.max - M1));
  r.pass = r.margin <= tol;
  return r;
}

struct UniquenessReport {
  std::vector<std::string> labels;
  std::vector<ScalarField> limits;
  // Gaps are taken on the inner half of the largest ball, where the exhaustion has
  // converged; the Dirichlet layer at the artificial boundary is excluded.
  double gap_two_start = 0.0;  // between the starts M and 1.9 M
  double gap_all = 0.0;        // including the bump-seeded run
  double gap_full_ball = 0.0;  // M vs 1.9 M over the whole largest ball, diagnostic only
  Point where{0, 0, 0};
  bool agree = false;          // gap_two_start <= 3 tol
};

// Limits from the supersolutions M and 1.9 M, and a relaxation started from a
// randomly perturbed bump below the solution.
inline UniquenessReport uniqueness_probe(const Nonlinearity& nl, const DriftSpec& drift,
                                         const std::vector<double>& radii, const KppConfig& cfg) {
  {
    const double R = radii.empty() ? 1.0 : radii.back();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> U(-R, R);
    bool any = false;
    for (int k = 0; k < 256 && !any; ++k) {
      Point x{0, 0, 0};
      for (int c = 0; c < cfg.dim; ++c) x[c] = U(rng);
      if (std::abs(nl.ell(x)) > 1e-14) any = true;
    }
    if (!any) throw Error(Errc::precondition, "ell vanishes identically; positivity of the small-s rate fails");
  }
  UniquenessReport out;
  const WholeSpaceResult a = solve_kpp_whole_space(nl, drift, radii, cfg, nl.M);
  const WholeSpaceResult b = solve_kpp_whole_space(nl, drift, radii, cfg, 1.9 * nl.M);
  out.labels = {"M", "1.9M"};
  out.limits = {a.field, b.field};
  const double R = radii.back();
  out.gap_two_start = detail::gap_on(a.field, b.field, 0.5 * R, &out.where);
  out.gap_full_ball = detail::gap_on(a.field, b.field, R);

  // Bump seed on the largest ball, perturbed multiplicatively, relaxed upward.
  const CoefficientSet cs = cfg.coeffs(drift);
  const MaskPtr mask = a.field.mask;
  const double eps = cfg.bump_epsilon;
  ScalarField seed = sample(bump_sampler(a.bump_center, eps, cfg.dim), mask);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> U(0.9, 1.0);
  for (auto i : mask->interior) seed.values[i] *= cfg.bump_scale * U(rng);
  SolverConfig sc = cfg.solver;
  sc.max_iters = std::max(sc.max_iters, 1);
  const SolveReport c = relax_to_steady(seed, cs, nl.reaction(), Sampler::constant(0.0), sc);
  out.labels.push_back("bump");
  out.limits.push_back(c.field);
  out.gap_all = std::max(out.gap_two_start, detail::gap_on(a.field, c.field, 0.5 * R));
  out.agree = out.gap_two_start <= 3.0 * cfg.solver.tol_residual;
  return out;
}

struct NonexistenceReport {
  double certificate_max = 0.0;  // max over nodes of L_h V + ell V^{3-gamma}; must be <= 0
  double final_sup = 0.0;
  bool collapsed = false;
  WholeSpaceResult run;
};

// Discrete L_h V + ell V^{3-gamma} on the mask; returns the max and the worst node.
inline double envelope_certificate(const MaskPtr& mask, const GrowthEnvelope& env, const Sampler& ell,
                                   const CoefficientSet& cs, Point* worst = nullptr) {
  const ScalarField V = sample(env.V, mask);
  for (auto i : mask->active())
    if (!(V.values[i] >= env.inf_V - 1e-12))
      throw Error(Errc::precondition, "envelope below inf_V at " + format_point(mask->grid.coord(i), mask->grid.dim));
  const ScalarField LV = apply_L(V, cs);
  const double p = 3.0 - cs.gamma;
  double mx = -INFINITY;
  for (auto i : mask->interior) {
    const Point x = mask->grid.coord(i);
    const double v = LV.values[i] + ell(x) * std::pow(V.values[i], p);
    if (v > mx) {
      mx = v;
      if (worst) *worst = x;
    }
  }
  return mx;
}

inline NonexistenceReport nonexistence_check(const Nonlinearity& nl, const GrowthEnvelope& env, const DriftSpec& drift,
                                             const std::vector<double>& radii, const KppConfig& cfg,
                                             double threshold = 1e-3) {
  if (radii.empty()) throw Error(Errc::invalid_argument, "radii schedule is empty");
  if (!(env.inf_V > 0.0)) throw Error(Errc::invalid_argument, "envelope needs inf_V > 0");
  NonexistenceReport out;
  const CoefficientSet cs = cfg.coeffs(drift);
  const MaskPtr mask = build_mask(ball_grid(radii.back(), cfg), Ball{{0, 0, 0}, radii.back()});
  Point worst{0, 0, 0};
  out.certificate_max = envelope_certificate(mask, env, nl.ell, cs, &worst);
  if (out.certificate_max > 0.0)
    throw Error(Errc::certificate_failed, "envelope certificate fails at " + format_point(worst, cfg.dim) +
                                              " with value " + std::to_string(out.certificate_max));
  KppConfig c = cfg;
  c.bump_scale = 0.0;  // no positive subsolution exists here
  out.run = solve_kpp_whole_space(nl, drift, radii, c, nl.M);
  out.final_sup = 0.0;
  for (auto i : out.run.field.mask->interior) out.final_sup = std::max(out.final_sup, std::abs(out.run.field.values[i]));
  out.collapsed = out.final_sup <= threshold;
  return out;
}

}  // namespace ilab
