#pragma once

#include "ilab/dirichlet.hpp"
#include "ilab/oracles.hpp"

#include <limits>

namespace ilab {

struct EigenConfig {
  SolverConfig solver{};
  double bracket_tol = -1.0;   // <= 0: 1e-2 * (1 + ||c||_inf)
  int check_every = 200;       // sweeps between certificate checks
  int max_bisections = 200;
};

inline double sup_abs_c(const MaskPtr& mask, const CoefficientSet& cs) {
  double m = 0.0;
  if (!cs.c) return 0.0;
  for (auto i : mask->interior) m = std::max(m, std::abs(cs.c(mask->grid.coord(i))));
  return m;
}

enum class Feasibility { Converged, Supersolution, Subsolution, Blowup, Diverged, Undecided };

inline const char* feasibility_name(Feasibility f) {
  switch (f) {
    case Feasibility::Converged: return "converged";
    case Feasibility::Supersolution: return "supersolution-certified";
    case Feasibility::Subsolution: return "subsolution-certified";
    case Feasibility::Blowup: return "blowup";
    case Feasibility::Diverged: return "diverged";
    case Feasibility::Undecided: return "undecided";
  }
  return "?";
}

struct ForcedReport {
  SolveReport report;
  Feasibility outcome = Feasibility::Undecided;
  bool feasible = false;
  double sup_norm = 0.0;
};

// L u + (c + lambda) u^{3-gamma} = -1, u = 0 on the boundary, iterated upward from
// the subsolution 0 (or a warm start below the solution). A positive iterate with
// residual below 1 everywhere is a strict supersolution of the eigen-equation, which
// certifies solvability; residual above 1 everywhere certifies the opposite.
inline ForcedReport solve_forced(double lambda, const MaskPtr& mask, const CoefficientSet& coeffs,
                                 const EigenConfig& ecfg = {}, const ScalarField* warm = nullptr) {
  CoefficientSet cs = coeffs;
  cs.h_rhs = Sampler::constant(-1.0);
  const Sampler c = coeffs.c;
  const Reaction F = reactions::potential(
      Sampler([c, lambda](const Point& x) { return c(x) + lambda; }), coeffs.gamma);
  ScalarField u0 = warm ? *warm : ScalarField(mask, 0.0);
  set_boundary(u0, Sampler::constant(0.0));
  const int every = std::max(1, ecfg.check_every);
  Feasibility cert = Feasibility::Undecided;
  const auto& interior = mask->interior;
  std::vector<double> prevR;
  SweepMonitor mon = [&](int it, const ScalarField& u, const std::vector<double>& R) {
    if (it == 0 || it % every != 0) return false;
    bool pos = true, below = true, above = true, rpos = true, grow = !prevR.empty(), shrink = !prevR.empty();
    for (std::size_t s = 0; s < interior.size(); ++s) {
      if (!(u.values[interior[s]] > 0.0)) pos = false;
      if (!(R[s] < 1.0)) below = false;
      if (!(R[s] > 1.0)) above = false;
      if (!(R[s] > 0.0)) rpos = false;
      if (grow && !(R[s] > prevR[s])) grow = false;
      if (shrink && !(R[s] < prevR[s])) shrink = false;
    }
    prevR = R;
    if (!pos) return false;
    // The increment u_k - u_{k-m} is positive when R > 0; its image under the
    // linearized operator has the sign of the residual change.
    if (below || (rpos && shrink)) cert = Feasibility::Supersolution;
    else if (above || (rpos && grow)) cert = Feasibility::Subsolution;
    return cert != Feasibility::Undecided;
  };
  // Warm starts begin with a tiny residual that legitimately grows before it decays,
  // so feasibility is decided by the blowup cap and the certificates only.
  SolverConfig scfg = ecfg.solver;
  scfg.divergence_window = std::numeric_limits<int>::max();
  ForcedReport out;
  out.report = relax_to_steady(u0, cs, F, Sampler{}, scfg, mon);
  out.sup_norm = out.report.field.interior_max();
  switch (out.report.status) {
    case SolveStatus::Converged: out.outcome = Feasibility::Converged; break;
    case SolveStatus::Stopped: out.outcome = cert; break;
    case SolveStatus::Blowup: out.outcome = Feasibility::Blowup; break;
    case SolveStatus::Diverged: out.outcome = Feasibility::Diverged; break;
    case SolveStatus::MaxIters: out.outcome = Feasibility::Undecided; break;
  }
  out.feasible = (out.outcome == Feasibility::Converged || out.outcome == Feasibility::Supersolution) &&
                 out.report.field.interior_min() > 0.0;
  return out;
}

// Maximum principle probe for L u + (c + lambda) u_+^{3-gamma} = 0 with u <= 0 on the
// boundary, started from a positive profile. True when the profile decays.
inline bool max_principle_test(double lambda, const MaskPtr& mask, const CoefficientSet& coeffs,
                               const EigenConfig& ecfg = {}) {
  const Sampler c = coeffs.c;
  const double p = 3.0 - coeffs.gamma;
  Reaction F;
  F.f = [c, lambda, p](const Point& x, double s) { return (c(x) + lambda) * (s > 0 ? std::pow(s, p) : 0.0); };
  F.df = [c, lambda, p](const Point& x, double s) {
    return (c(x) + lambda) * (s > 0 ? p * std::pow(s, p - 1.0) : 0.0);
  };
  ScalarField u0(mask, 1.0);
  set_boundary(u0, Sampler::constant(0.0));
  CoefficientSet cs = coeffs;
  cs.h_rhs = Sampler{};
  const int every = std::max(1, ecfg.check_every);
  int verdict = 0;  // 1 decays, -1 persists
  const auto& interior = mask->interior;
  const double tol = ecfg.solver.tol_residual;
  SweepMonitor mon = [&](int it, const ScalarField& u, const std::vector<double>& R) {
    if (it % every != 0) return false;
    double umax = -INFINITY;
    bool pos = true, sub = true, super = true;
    for (std::size_t s = 0; s < interior.size(); ++s) {
      const double v = u.values[interior[s]];
      umax = std::max(umax, v);
      if (!(v > 0.0)) pos = false;
      if (!(R[s] > 0.0)) sub = false;
      if (!(R[s] < 0.0)) super = false;
    }
    if (umax <= tol) verdict = 1;
    else if (pos && super && it > 0) verdict = 1;
    else if (pos && sub && it > 0) verdict = -1;
    return verdict != 0;
  };
  SolverConfig scfg = ecfg.solver;
  scfg.divergence_window = std::numeric_limits<int>::max();
  const SolveReport r = relax_to_steady(u0, cs, F, Sampler{}, scfg, mon);
  if (verdict != 0) return verdict > 0;
  if (r.status == SolveStatus::Blowup || r.status == SolveStatus::Diverged) return false;
  return r.field.interior_max() <= tol;
}

struct UpperBound {
  double lambda = INFINITY;
  double k = 0.0;
  double min_margin = 0.0;
  int attempts = 0;
};

// Certified lambda for the Gaussian test function e^{-k|x-x0|^2} - e^{-kR^2} on a ball:
// the discrete operator satisfies L phi + (c + lambda) phi^{3-gamma} > 0 at every Interior node.
inline UpperBound lemma33_upper_bound(const MaskPtr& mask, const CoefficientSet& coeffs, int max_attempts = 12) {
  const Ball* ball = std::get_if<Ball>(&mask->shape);
  if (!ball) throw Error(Errc::invalid_argument, "lemma33_upper_bound needs a ball mask");
  coeffs.validate();
  const double R = ball->radius, gamma = coeffs.gamma, p = 3.0 - gamma;
  const Point x0 = ball->center;
  const int dim = mask->grid.dim;
  const auto& interior = mask->interior;

  // Analytic choice of lambda for each k (worst-case drift), then a discrete check.
  UpperBound best;
  double k = 0.5 / (R * R);
  for (int attempt = 1; attempt <= max_attempts; ++attempt, k *= 2.0) {
    const RadialProfile prof = RadialProfile::gaussian(k, R);
    double lam = -INFINITY;
    std::vector<double> phi(interior.size());
    for (std::size_t s = 0; s < interior.size(); ++s) {
      const Point x = mask->grid.coord(interior[s]);
      const double r = norm(sub(x, x0), dim);
      phi[s] = prof.value(r);
      const double qn = coeffs.q ? norm(coeffs.q(x), dim) : 0.0;
      double L;
      if (r < 1e-12 * R) L = gamma == 2.0 ? prof.d2(0.0) : 0.0;
      else L = radial_L_value(prof, gamma, r, qn);  // u' < 0, so +|q| is the worst radial drift
      const double cv = coeffs.c ? coeffs.c(x) : 0.0;
      lam = std::max(lam, -L / std::pow(phi[s], p) - cv);
    }
    lam += 1e-9 * (1.0 + std::abs(lam));

    ScalarField f(mask, 0.0);
    for (std::size_t s = 0; s < interior.size(); ++s) f.values[interior[s]] = phi[s];
    set_boundary(f, Sampler([&prof, x0, dim](const Point& x) { return prof.value(norm(sub(x, x0), dim)); }));
    const ScalarField Lh = apply_L(f, coeffs);
    double margin = INFINITY;
    for (std::size_t s = 0; s < interior.size(); ++s) {
      const double cv = coeffs.c ? coeffs.c(mask->grid.coord(interior[s])) : 0.0;
      margin = std::min(margin, Lh.values[interior[s]] + (cv + lam) * std::pow(phi[s], p));
    }
    if (margin > 0.0 && lam < best.lambda) {
      best.lambda = lam;
      best.k = k;
      best.min_margin = margin;
      best.attempts = attempt;
    } else if (std::isfinite(best.lambda)) {
      break;  // past the minimizing k
    }
  }
  if (!std::isfinite(best.lambda))
    throw Error(Errc::certificate_failed, "Gaussian test function could not be certified as a strict subsolution");
  return best;
}

inline Shape inscribed_ball(const Shape& s, int dim) {
  return std::visit(
      [dim](const auto& sh) -> Shape {
        using T = std::decay_t<decltype(sh)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return sh;
        } else if constexpr (std::is_same_v<T, Annulus>) {
          Ball b;
          b.center = sh.center;
          b.center[0] += 0.5 * (sh.r_in + sh.r_out);
          b.radius = 0.5 * (sh.r_out - sh.r_in);
          return b;
        } else {
          Ball b;
          b.radius = INFINITY;
          for (int c = 0; c < dim; ++c) {
            b.center[c] = 0.5 * (sh.lo[c] + sh.hi[c]);
            b.radius = std::min(b.radius, 0.5 * (sh.hi[c] - sh.lo[c]));
          }
          return b;
        }
      },
      s);
}

struct EigenResult {
  double lambda_lo = 0.0, lambda_hi = 0.0;
  ScalarField eigenfunction;
  std::vector<std::pair<double, double>> probes;  // (lambda, sup-norm of forced solution; inf when infeasible)
  std::vector<std::string> probe_outcomes;
  std::vector<double> probe_residuals;            // last residual sup-norm of each probe
  double bracket_tol = 0.0;
  int widenings = 0;
};

inline EigenResult principal_eigenvalue(const MaskPtr& mask, const CoefficientSet& coeffs, const EigenConfig& ecfg = {}) {
  coeffs.validate();
  const double cn = sup_abs_c(mask, coeffs);
  EigenResult out;
  out.bracket_tol = ecfg.bracket_tol > 0 ? ecfg.bracket_tol : 1e-2 * (1.0 + cn);

  double lo = -cn - 1.0;
  double hi;
  {
    const Shape b = inscribed_ball(mask->shape, mask->grid.dim);
    const MaskPtr bm = std::holds_alternative<Ball>(mask->shape) ? mask : build_mask(mask->grid, b);
    hi = lemma33_upper_bound(bm, coeffs).lambda;
  }
  ScalarField best;
  auto probe = [&](double lam, const ScalarField* warm) {
    ForcedReport r = solve_forced(lam, mask, coeffs, ecfg, warm);
    out.probes.emplace_back(lam, r.feasible ? r.sup_norm : INFINITY);
    out.probe_outcomes.emplace_back(feasibility_name(r.outcome));
    const auto& hist = r.report.residual_history;
    out.probe_residuals.push_back(hist.empty() ? 0.0 : hist.back());
    return r;
  };

  ForcedReport rl = probe(lo, nullptr);
  if (!rl.feasible) throw Error(Errc::invalid_bracket, "lower probe " + std::to_string(lo) + " is not feasible");
  best = rl.report.field;
  ForcedReport rh = probe(hi, &best);
  if (rh.feasible) {
    ++out.widenings;
    lo = hi;
    best = rh.report.field;
    hi = hi + (hi - (-cn - 1.0)) + 1.0;
    rh = probe(hi, &best);
    if (rh.feasible) throw Error(Errc::invalid_bracket, "upper probe " + std::to_string(hi) + " is feasible after widening");
  }
  for (int b = 0; b < ecfg.max_bisections && hi - lo > out.bracket_tol; ++b) {
    const double mid = 0.5 * (lo + hi);
    ForcedReport r = probe(mid, &best);
    if (r.feasible) {
      lo = mid;
      best = r.report.field;
    } else {
      hi = mid;
    }
  }
  out.lambda_lo = lo;
  out.lambda_hi = hi;
  const double m = best.interior_max();
  out.eigenfunction = best;
  for (auto& v : out.eigenfunction.values) v = m > 0 ? v / m : v;
  for (auto& v : out.eigenfunction.surface) v = m > 0 ? v / m : v;
  return out;
}

// lambda_alpha / alpha for the potentials alpha * c.
inline std::vector<std::pair<double, double>> scaling_limit_check(const std::vector<double>& alphas, const MaskPtr& mask,
                                                                  const CoefficientSet& coeffs, const EigenConfig& ecfg = {}) {
  for (std::size_t i = 1; i < alphas.size(); ++i)
    if (!(alphas[i] > alphas[i - 1])) throw Error(Errc::invalid_argument, "alphas must be increasing");
  std::vector<std::pair<double, double>> out;
  for (double a : alphas) {
    if (!(a > 0)) throw Error(Errc::invalid_argument, "alphas must be positive");
    CoefficientSet cs = coeffs;
    const Sampler c = coeffs.c;
    cs.c = Sampler([c, a](const Point& x) { return a * c(x); });
    const EigenResult r = principal_eigenvalue(mask, cs, ecfg);
    out.emplace_back(a, 0.5 * (r.lambda_lo + r.lambda_hi) / a);
  }
  return out;
}

inline std::vector<EigenResult> domain_continuity_check(const std::vector<MaskPtr>& masks, const CoefficientSet& coeffs,
                                                        const EigenConfig& ecfg = {}) {
  std::vector<EigenResult> out;
  for (const auto& m : masks) out.push_back(principal_eigenvalue(m, coeffs, ecfg));
  return out;
}

// Largest nu with phi(x) >= nu (r - |x - x0|) over Interior nodes of Ball(x0, r).
inline double hopf_fit(const ScalarField& phi, const Ball& ball) {
  const auto& m = *phi.mask;
  double nu = INFINITY;
  for (auto i : m.interior) {
    const double d = ball.radius - norm(sub(m.grid.coord(i), ball.center), m.grid.dim);
    if (d > 0) nu = std::min(nu, phi.values[i] / d);
  }
  return nu;
}

}  // namespace ilab
