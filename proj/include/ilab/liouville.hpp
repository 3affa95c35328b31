#pragma once

#include "ilab/dirichlet.hpp"
#include "ilab/oracles.hpp"

namespace ilab {

struct ExperimentConfig {
  double gamma = 0.0;
  Scheme scheme = Scheme::Flux;
  double alpha_test = -0.5;   // exponent of theta, in (-1, 0)
  double epsilon = 1.0;       // theta = (|x| / epsilon)^alpha
  double beta = 1.0;          // absorption exponent, in (0, 3 - gamma)
  std::vector<double> radii{4, 8, 16, 32};
  double h = 1.0 / 8;
  double tol = 1e-8;
  double threshold = 1e-3;
  SolverConfig solver = [] {
    SolverConfig s;
    s.max_iters = 2000000;
    return s;
  }();

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 2.0)) throw Error(Errc::invalid_argument, "gamma must lie in [0,2]");
    if (!(alpha_test > -1.0 && alpha_test < 0.0)) throw Error(Errc::invalid_argument, "alpha_test must lie in (-1,0)");
    if (!(epsilon > 0.0)) throw Error(Errc::invalid_argument, "epsilon must be positive");
    if (!(beta > 0.0 && beta <= 3.0 - gamma)) throw Error(Errc::invalid_argument, "beta must lie in (0, 3-gamma]");
    if (!(h > 0.0)) throw Error(Errc::invalid_argument, "h must be positive");
    if (radii.empty()) throw Error(Errc::invalid_argument, "radii list is empty");
    for (std::size_t i = 1; i < radii.size(); ++i)
      if (!(radii[i] > radii[i - 1])) throw Error(Errc::invalid_argument, "radii must be increasing");
  }
};

// Delta_inf theta - |theta'|^4 for theta(r) = (r/eps)^a, derived from theta' and theta''.
inline double theta_gap_exact(double a, double eps, double r) {
  const double t1 = a * std::pow(r, a - 1.0) * std::pow(eps, -a);
  const double t2 = a * (a - 1.0) * std::pow(r, a - 2.0) * std::pow(eps, -a);
  return t1 * t1 * t2 - std::pow(t1, 4.0);
}

struct ThetaReport {
  double alpha = 0.0;
  double min_margin = INFINITY;   // min discrete value over the annulus
  double worst_r = 0.0;
  double max_deviation = 0.0;     // sup |discrete - exact|
  double rel_deviation = 0.0;     // max_deviation / sup |exact|
  std::size_t nodes = 0;
  bool pass = false;              // min_margin > 0
  bool flagged = false;           // min_margin < 10 h
};

// Discrete Delta_inf theta - G^4 on the 1D annulus [eps, radii.front()], nodes at
// distance >= 10h from the origin, with exact theta as boundary data.
inline ThetaReport certify_theta_subsolution(const ExperimentConfig& cfg) {
  cfg.validate();
  const double a = cfg.alpha_test, eps = cfg.epsilon, R = cfg.radii.front(), h = cfg.h;
  if (!(R > eps + 4 * h)) throw Error(Errc::invalid_argument, "annulus [eps, R] too thin for h");
  const Grid g = Grid::cube(1, h * std::floor(eps / h), h * std::ceil(R / h), h);
  const MaskPtr m = build_mask(g, Box{{eps, 0, 0}, {R, 0, 0}});
  const ScalarField th = sample(Sampler([a, eps](const Point& x) { return std::pow(std::abs(x[0]) / eps, a); }), m);
  CoefficientSet cs;
  cs.gamma = 0.0;
  cs.scheme = cfg.scheme;
  const ScalarField L = apply_L(th, cs);
  ThetaReport out;
  out.alpha = a;
  double sup_exact = 0.0;
  for (auto i : m->interior) {
    const double r = std::abs(g.coord(i)[0]);
    if (r < std::max(eps, 10 * h)) continue;
    const double G = directional_extremes(th, i).G;
    const double v = L.values[i] - G * G * G * G;
    const double ex = theta_gap_exact(a, eps, r);
    ++out.nodes;
    if (v < out.min_margin) {
      out.min_margin = v;
      out.worst_r = r;
    }
    out.max_deviation = std::max(out.max_deviation, std::abs(v - ex));
    sup_exact = std::max(sup_exact, std::abs(ex));
  }
  out.rel_deviation = sup_exact > 0 ? out.max_deviation / sup_exact : out.max_deviation;
  out.pass = out.nodes > 0 && out.min_margin > 0.0;
  out.flagged = out.min_margin < 10 * h;
  return out;
}

struct DriftEnvelope {
  VectorSampler q;
  double compact_radius = 1.0;  // (q.x)_+ <= 1 - delta0 is required for |x| >= compact_radius
  double delta0 = 0.1;
};

struct OscillationRow {
  double radius = 0.0;
  double inf_u = 0.0;        // over the whole annulus
  double min_K = 1.0;        // inner data
  double oscillation = 0.0;  // on the fixed set [eps, radii.front()/2]
  double theta_gap = 0.0;    // min (u - min_K theta) over the annulus
  int sweeps = 0;
  std::string status;
};

struct LiouvilleIIReport {
  std::vector<OscillationRow> rows;
  bool inf_ok = false;        // inf_u >= min_K - tol at every radius
  bool monotone_trace = false;  // oscillation non-increasing within tol
  double envelope_max = 0.0;  // sampled sup of (q.x)_+ outside the compact set
};

// L u = 0 on [eps, R] with u(eps) = 1 and u(R) = 2 for each R; u is a bounded-below
// supersolution, and the trace shows its oscillation on a fixed inner set.
inline LiouvilleIIReport liouville_II_experiment(const DriftEnvelope& drift, const ExperimentConfig& cfg) {
  cfg.validate();
  const double eps = cfg.epsilon, h = cfg.h, a = cfg.alpha_test;
  LiouvilleIIReport out;
  {
    const double Rmax = cfg.radii.back();
    double worst = 0.0;
    for (double r = drift.compact_radius; r <= Rmax; r += h) {
      const double qx = drift.q ? drift.q(Point{r, 0, 0})[0] * r : 0.0;
      worst = std::max(worst, qx);
    }
    out.envelope_max = worst;
    if (worst > 1.0 - drift.delta0)
      throw Error(Errc::certificate_failed, "(q.x)_+ reaches " + std::to_string(worst) + " outside the compact set");
  }
  CoefficientSet cs;
  cs.gamma = cfg.gamma;
  cs.scheme = cfg.scheme;
  cs.q = drift.q;
  const double K_hi = cfg.radii.front() / 2;
  out.inf_ok = true;
  out.monotone_trace = true;
  for (double R : cfg.radii) {
    if (!(R > eps + 4 * h)) throw Error(Errc::invalid_argument, "radius too small for the annulus");
    const Grid g = Grid::cube(1, h * std::floor(eps / h), h * std::ceil(R / h), h);
    const MaskPtr m = build_mask(g, Box{{eps, 0, 0}, {R, 0, 0}});
    const double mid = 0.5 * (eps + R);
    const Sampler bc([mid](const Point& x) { return x[0] < mid ? 1.0 : 2.0; });
    ScalarField u0 = sample(Sampler([eps, R](const Point& x) { return 1.0 + (x[0] - eps) / (R - eps); }), m);
    SolverConfig sc = cfg.solver;
    sc.tol_residual = cfg.tol;
    const SolveReport rep = relax_to_steady(u0, cs, Reaction{}, bc, sc);
    OscillationRow row;
    row.radius = R;
    row.sweeps = rep.iterations;
    row.status = status_name(rep.status);
    double lo = INFINITY, hi = -INFINITY, inf_u = INFINITY, tg = INFINITY;
    for (auto i : m->active()) {
      const double x = g.coord(i)[0], v = rep.field.values[i];
      inf_u = std::min(inf_u, v);
      tg = std::min(tg, v - std::pow(x / eps, a));
      if (x <= K_hi + 1e-12) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    row.inf_u = inf_u;
    row.oscillation = hi - lo;
    row.theta_gap = tg;
    if (inf_u < row.min_K - cfg.tol) out.inf_ok = false;
    if (!out.rows.empty() && row.oscillation > out.rows.back().oscillation + cfg.tol) out.monotone_trace = false;
    out.rows.push_back(row);
  }
  return out;
}

struct SharpnessReport {
  double max_deviation = 0.0;  // sup |L_h u - (-8x^2/(1+x^2)^6)|
  double max_residual = 0.0;   // sup of L_h u; <= 0 certifies u as a supersolution
  double oscillation = 0.0;
  bool positive = false;       // u > 0 at every node
  bool pass = false;
};

// u = 1/(1+x^2) with drift q = 4x/(1+x^2), gamma = 0, on [-L, L].
inline SharpnessReport sharpness_witness(double h = 1e-3, double L = 3.0, int workers = 1) {
  const Grid g = Grid::cube(1, -L, L, h);
  const MaskPtr m = build_mask(g, Box{{-L, 0, 0}, {L, 0, 0}});
  const ScalarField u = sample(Sampler([](const Point& x) { return 1.0 / (1.0 + x[0] * x[0]); }), m);
  CoefficientSet cs;
  cs.gamma = 0.0;
  cs.q = VectorSampler([](const Point& x) { return Point{4.0 * x[0] / (1.0 + x[0] * x[0]), 0, 0}; });
  const ScalarField Lu = apply_L(u, cs, workers);
  SharpnessReport out;
  out.max_residual = -INFINITY;
  out.positive = true;
  for (auto i : m->interior) {
    const double x = g.coord(i)[0], p = 1.0 + x * x;
    const double ex = -8.0 * x * x / std::pow(p, 6.0);
    out.max_deviation = std::max(out.max_deviation, std::abs(Lu.values[i] - ex));
    out.max_residual = std::max(out.max_residual, Lu.values[i]);
    if (!(u.values[i] > 0.0)) out.positive = false;
  }
  out.oscillation = u.oscillation();
  out.pass = out.max_deviation <= 1e-2 && out.max_residual <= 0.0 && out.positive && out.oscillation > 0.0;
  return out;
}

struct DecayRow {
  double radius = 0.0;
  double sup_pos = 0.0;  // sup of u_+ after relaxation
  int sweeps = 0;
  std::string status;
};

struct LiouvilleIIIReport {
  double alpha = 0.0;              // exponent of V = |x|^alpha
  double certificate_margin = 0.0; // min over nodes of -c - alpha^{3-gamma}((alpha-1) + (q.x)_+)
  double discrete_check = 0.0;     // max over nodes of L_h V + c V^beta, diagnostic
  std::vector<DecayRow> rows;
  double final_sup = 0.0;
  bool nonpositive_kept = false;   // seed <= 0 stays <= 0
  bool pass = false;               // final_sup <= threshold
};

// Relaxation of L u + c u_+^beta = 0 from the seed on Ball(0,R), 1D, with boundary data
// min(seed, kappa V).
inline LiouvilleIIIReport liouville_III_experiment(const Sampler& c, const Sampler& seed, const ExperimentConfig& cfg,
                                                   const VectorSampler& q = {}, double kappa = 1.0) {
  cfg.validate();
  const double gamma = cfg.gamma, beta = cfg.beta, h = cfg.h;
  if (!(beta < 3.0 - gamma)) throw Error(Errc::invalid_argument, "beta must be below 3-gamma for a power envelope");
  LiouvilleIIIReport out;
  const double al = (4.0 - gamma) / (3.0 - gamma - beta);
  out.alpha = al;
  const Sampler V([al](const Point& x) { return std::pow(std::abs(x[0]), al); }, "power envelope");
  CoefficientSet cs;
  cs.gamma = gamma;
  cs.scheme = cfg.scheme;
  cs.q = q;

  const double Rmax = cfg.radii.back();
  const Grid gmax = Grid::cube(1, -h * std::ceil(Rmax / h), h * std::ceil(Rmax / h), h);
  const MaskPtr mmax = build_mask(gmax, Ball{{0, 0, 0}, Rmax});
  out.certificate_margin = INFINITY;
  for (auto i : mmax->active()) {
    const Point x = gmax.coord(i);
    const double cv = c(x);
    if (!(cv < 0.0)) throw Error(Errc::precondition, "c must be negative, fails at " + format_point(x, 1));
    const double qx = q ? std::max(0.0, q(x)[0] * x[0]) : 0.0;
    out.certificate_margin = std::min(out.certificate_margin, -cv - std::pow(al, 3.0 - gamma) * ((al - 1.0) + qx));
  }
  if (out.certificate_margin < 0.0)
    throw Error(Errc::certificate_failed, "envelope inequality fails; margin " + std::to_string(out.certificate_margin));
  {
    const ScalarField Vf = sample(V, mmax);
    const ScalarField LV = apply_L(Vf, cs);
    out.discrete_check = -INFINITY;
    for (auto i : mmax->interior)
      out.discrete_check = std::max(out.discrete_check, LV.values[i] + c(gmax.coord(i)) * std::pow(Vf.values[i], beta));
  }

  Reaction F;
  F.f = [c, beta](const Point& x, double s) { return s > 0 ? c(x) * std::pow(s, beta) : 0.0; };
  F.df = [c, beta](const Point& x, double s) { return s > 0 ? c(x) * beta * std::pow(s, beta - 1.0) : 0.0; };
  bool seed_nonpos = true;
  out.nonpositive_kept = true;
  for (double R : cfg.radii) {
    const Grid g = Grid::cube(1, -h * std::ceil(R / h), h * std::ceil(R / h), h);
    const MaskPtr m = build_mask(g, Ball{{0, 0, 0}, R});
    ScalarField u0 = sample(seed, m);
    for (auto i : m->active())
      if (u0.values[i] > 0.0) seed_nonpos = false;
    const Sampler bc([seed, V, kappa](const Point& x) { return std::min(seed(x), kappa * V(x)); });
    SolverConfig sc = cfg.solver;
    sc.tol_residual = cfg.tol;
    const SolveReport rep = relax_to_steady(u0, cs, F, bc, sc);
    DecayRow row;
    row.radius = R;
    row.sweeps = rep.iterations;
    row.status = status_name(rep.status);
    for (auto i : m->active()) row.sup_pos = std::max(row.sup_pos, std::max(0.0, rep.field.values[i]));
    if (seed_nonpos && row.sup_pos > 0.0) out.nonpositive_kept = false;
    out.rows.push_back(row);
  }
  if (!seed_nonpos) out.nonpositive_kept = false;
  out.final_sup = out.rows.back().sup_pos;
  out.pass = out.final_sup <= cfg.threshold;
  return out;
}

}  // namespace ilab
