#pragma once

#include "ilab/core.hpp"

namespace ilab {

// Product: G^{2-gamma} S. Flux: (T(s_max) + T(s_min)) / ((3-gamma) rho_bar) with
// T(s) = s|s|^{2-gamma}, which is nondecreasing in every ray value. Both agree at gamma = 2.
enum class Scheme { Product, Flux };

struct CoefficientSet {
  double gamma = 0.0;
  Scheme scheme = Scheme::Flux;
  VectorSampler q;   // drift; empty means zero
  Sampler c;         // potential; empty means zero
  Sampler h_rhs;     // forcing; empty means zero

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 2.0))
      throw Error(Errc::invalid_argument, "gamma must lie in [0,2], got " + std::to_string(gamma));
  }
};

// Zero-order term f(x, s). An optional per-node additive shift covers
// node-dependent right-hand sides such as the frozen monotone-iteration data.
struct Reaction {
  std::function<double(const Point&, double)> f;
  std::function<double(const Point&, double)> df;  // optional; finite differences otherwise
  std::string name;

  explicit operator bool() const { return static_cast<bool>(f); }

  double value(const Point& x, double s) const { return f ? f(x, s) : 0.0; }
  double slope(const Point& x, double s) const {
    if (!f) return 0.0;
    if (df) return df(x, s);
    const double e = 1e-6 * (1.0 + std::abs(s));
    return (f(x, s + e) - f(x, s - e)) / (2.0 * e);
  }
};

struct Extremes {
  double u_max = 0, u_min = 0;
  double G = 0;   // (s_max - s_min) / 2, the gradient-magnitude surrogate
  double S = 0;   // normalized second difference along the extremal pair
  double rho_max = 0, rho_min = 0;
  double s_max = 0, s_min = 0;  // extreme one-sided slopes
};

namespace detail {

inline double gpow(double G, double gamma) {
  if (gamma == 0.0) return G * G;
  if (gamma == 2.0) return 1.0;
  if (gamma == 1.0) return G;
  return std::pow(G, 2.0 - gamma);
}

// Coefficients sampled on the Interior slots of one mask.
struct SampledCoeffs {
  double gamma = 0.0;
  Scheme scheme = Scheme::Flux;
  bool has_q = false;
  std::vector<Point> q;
  std::vector<double> c, h;

  SampledCoeffs() = default;
  SampledCoeffs(const CoefficientSet& cs, const DomainMask& m)
      : gamma(cs.gamma), scheme(cs.scheme), has_q(static_cast<bool>(cs.q)) {
    cs.validate();
    const std::size_t n = m.interior.size();
    const int dim = m.grid.dim;
    c.assign(n, 0.0);
    h.assign(n, 0.0);
    if (has_q) q.assign(n, Point{0, 0, 0});
    for (std::size_t s = 0; s < n; ++s) {
      const Point x = m.grid.coord(m.interior[s]);
      if (cs.c) c[s] = checked_sample(cs.c, x, dim);
      if (cs.h_rhs) h[s] = checked_sample(cs.h_rhs, x, dim);
      if (has_q) {
        q[s] = cs.q(x);
        for (int k = 0; k < dim; ++k)
          if (!std::isfinite(q[s][k])) throw Error(Errc::non_finite, "drift is not finite at " + format_point(x, dim));
      }
    }
  }
};

inline Extremes extremes_at(const ScalarField& u, std::size_t slot) {
  const DomainMask& m = *u.mask;
  const std::size_t nd = m.ndir();
  const Arm* arms = m.arms_of(slot);
  const double u0 = u.values[m.interior[slot]];
  double smax = -INFINITY, smin = INFINITY;
  std::size_t jmax = 0, jmin = 0;
  for (std::size_t j = 0; j < nd; ++j) {
    const double sl = (u.ray_value(arms[j]) - u0) / arms[j].dist;
    if (sl > smax) {
      smax = sl;
      jmax = j;
    }
    if (sl < smin) {
      smin = sl;
      jmin = j;
    }
  }
  Extremes e;
  e.rho_max = arms[jmax].dist;
  e.rho_min = arms[jmin].dist;
  e.u_max = u.ray_value(arms[jmax]);
  e.u_min = u.ray_value(arms[jmin]);
  e.s_max = smax;
  e.s_min = smin;
  e.G = 0.5 * (smax - smin);
  e.S = 2.0 * (smax + smin) / (e.rho_max + e.rho_min);
  return e;
}

struct NodeEval {
  double L = 0;       // discrete operator value
  double G = 0;
  double gscale = 0;  // slope magnitude whose (2-gamma) power scales the diagonal
  double geo = 0;     // d L / d(-u_i) with gscale^{2-gamma} factored out
};

// Flux diffusion term: max over arms a of min over arms b of the pair quotient
// 2 (T(s_a) + T(s_b)) / ((3-gamma)(d_a + d_b)), T(s) = s |s|^{2-gamma}. Each quotient is
// continuous and non-decreasing in the ray values, so the max-min is too, even when the
// extremal arms have different lengths. On a symmetric stencil it picks the extremal pair.
inline double flux_diffusion(const ScalarField& u, std::size_t slot, double gamma, double& geo) {
  const DomainMask& m = *u.mask;
  const std::size_t nd = m.ndir();
  const Arm* arms = m.arms_of(slot);
  const double u0 = u.values[m.interior[slot]];
  double T[64], d[64];
  double* Tp = T;
  double* dp = d;
  std::vector<double> heapT, heapd;
  if (nd > 64) {
    heapT.resize(nd);
    heapd.resize(nd);
    Tp = heapT.data();
    dp = heapd.data();
  }
  for (std::size_t j = 0; j < nd; ++j) {
    const double sl = (u.ray_value(arms[j]) - u0) / arms[j].dist;
    Tp[j] = sl * gpow(std::abs(sl), gamma);
    dp[j] = arms[j].dist;
  }
  double best = -INFINITY, dmin = INFINITY;
  for (std::size_t a = 0; a < nd; ++a) {
    double lo = INFINITY;
    for (std::size_t b = 0; b < nd; ++b) lo = std::min(lo, (Tp[a] + Tp[b]) / (dp[a] + dp[b]));
    best = std::max(best, lo);
    dmin = std::min(dmin, dp[a]);
  }
  // Pair (a,b) has Lipschitz constant 2/(d_a d_b) in u_i; any pair may become active
  // after a step, so the bound uses the shortest arm.
  geo = 2.0 / (dmin * dmin);
  return 2.0 * best / (3.0 - gamma);
}

inline NodeEval eval_node(const ScalarField& u, std::size_t slot, const SampledCoeffs& cf, double eps_flat) {
  const DomainMask& m = *u.mask;
  const Extremes e = extremes_at(u, slot);
  NodeEval r;
  r.G = e.G;
  r.gscale = cf.scheme == Scheme::Flux ? std::max(std::abs(e.s_max), std::abs(e.s_min)) : e.G;
  r.geo = 2.0 * (1.0 / e.rho_max + 1.0 / e.rho_min) / (e.rho_max + e.rho_min);
  double drift = 0.0, drift_geo = 0.0;
  if (cf.has_q) {
    const Point& q = cf.q[slot];
    const Arm* arms = m.arms_of(slot);
    const double u0 = u.values[m.interior[slot]];
    for (int c = 0; c < m.grid.dim; ++c) {
      if (q[c] > 0.0) {
        const Arm& a = arms[m.axis_dir[c][0]];
        drift += q[c] * (u.ray_value(a) - u0) / a.dist;
        drift_geo += q[c] / a.dist;
      } else if (q[c] < 0.0) {
        const Arm& a = arms[m.axis_dir[c][1]];
        drift += q[c] * (u0 - u.ray_value(a)) / a.dist;
        drift_geo -= q[c] / a.dist;
      }
    }
  }
  if (cf.scheme == Scheme::Product) {
    r.geo += drift_geo;
    if (e.G < eps_flat) r.L = cf.gamma == 2.0 ? e.S : 0.0;
    else r.L = gpow(e.G, cf.gamma) * (e.S + drift);
    return r;
  }
  if (cf.gamma < 2.0 && e.G < eps_flat && r.gscale < eps_flat) {
    r.geo += drift_geo;
    r.L = 0.0;
    return r;
  }
  r.L = flux_diffusion(u, slot, cf.gamma, r.geo) + gpow(e.G, cf.gamma) * drift;
  r.geo += drift_geo;
  return r;
}

inline double flat_threshold(const ScalarField& u) { return 1e-12 * (1.0 + u.oscillation()); }

}  // namespace detail

inline Extremes directional_extremes(const ScalarField& u, std::size_t node) {
  const auto s = u.mask->slot[node];
  if (s < 0) throw Error(Errc::invalid_argument, "directional_extremes needs an Interior node");
  return detail::extremes_at(u, static_cast<std::size_t>(s));
}

// Interior values of the discrete operator; Boundary/surface entries are zero.
inline ScalarField apply_L(const ScalarField& u, const CoefficientSet& coeffs, int workers = 1) {
  const detail::SampledCoeffs cf(coeffs, *u.mask);
  const double eps = detail::flat_threshold(u);
  ScalarField out(u.mask, 0.0);
  const auto& interior = u.mask->interior;
  parallel_for(interior.size(), workers,
               [&](std::size_t s) { out.values[interior[s]] = detail::eval_node(u, s, cf, eps).L; });
  return out;
}

inline double reaction_at(const Reaction& f, const Point& x, double s, int dim) {
  const double v = f.value(x, s);
  if (!std::isfinite(v))
    throw Error(Errc::domain_error, "reaction undefined at node " + format_point(x, dim) + " for value " + std::to_string(s));
  return v;
}

// apply_L + f(x,u) - h_rhs on Interior.
inline ScalarField residual_semilinear(const ScalarField& u, const CoefficientSet& coeffs, const Reaction& f,
                                       int workers = 1) {
  const detail::SampledCoeffs cf(coeffs, *u.mask);
  const double eps = detail::flat_threshold(u);
  ScalarField out(u.mask, 0.0);
  const auto& m = *u.mask;
  // Reaction is evaluated serially so that a domain error always names the first bad node.
  std::vector<double> fv(m.interior.size(), 0.0);
  if (f)
    for (std::size_t s = 0; s < m.interior.size(); ++s)
      fv[s] = reaction_at(f, m.grid.coord(m.interior[s]), u.values[m.interior[s]], m.grid.dim);
  parallel_for(m.interior.size(), workers, [&](std::size_t s) {
    out.values[m.interior[s]] = detail::eval_node(u, s, cf, eps).L + fv[s] - cf.h[s];
  });
  return out;
}

namespace reactions {

inline double spow(double s, double p) { return s >= 0 ? std::pow(s, p) : -std::pow(-s, p); }

// c(x) * |s|^{2-gamma} s, strictly increasing in s when c > 0.
inline Reaction potential(Sampler c, double gamma) {
  const double p = 3.0 - gamma;
  Reaction r;
  r.f = [c, p](const Point& x, double s) { return c(x) * spow(s, p); };
  r.df = [c, p](const Point& x, double s) { return c(x) * p * std::pow(std::abs(s), p - 1.0); };
  r.name = "potential";
  return r;
}

// s^{3-gamma}(1 - s); undefined for s < 0 when the power is fractional.
inline Reaction kpp(double gamma) {
  const double p = 3.0 - gamma;
  Reaction r;
  r.f = [p](const Point&, double s) {
    if (s < 0 && p != std::floor(p)) return std::nan("");
    return std::pow(s, p) * (1.0 - s);
  };
  r.df = [p](const Point&, double s) {
    const double a = std::abs(s);
    return p * std::pow(a, p - 1.0) * (1.0 - s) - std::pow(a, p);
  };
  r.name = "kpp";
  return r;
}

}  // namespace reactions

}  // namespace ilab
