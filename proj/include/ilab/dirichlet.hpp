#pragma once

#include "ilab/operator.hpp"

namespace ilab {

struct SolverConfig {
  double tol_residual = 1e-8;
  int max_iters = 200000;
  double cfl_safety = 0.9;
  double sigma = 0.0;
  int workers = 1;
  double blowup_cap = 1e6;
  // Lower bound on the gradient surrogate used only when sizing pseudo-time steps.
  double gradient_floor = 0.1;
  int divergence_window = 100;
  double divergence_factor = 10.0;
  int max_outer = 400;
  bool keep_stack = false;

  void validate() const {
    if (!(tol_residual > 0.0)) throw Error(Errc::invalid_argument, "tol_residual must be positive");
    if (!(cfl_safety > 0.0 && cfl_safety < 1.0)) throw Error(Errc::invalid_argument, "cfl_safety must lie in (0,1)");
    if (!(sigma >= 0.0)) throw Error(Errc::invalid_argument, "sigma must be nonnegative");
    if (max_iters < 0) throw Error(Errc::invalid_argument, "max_iters must be nonnegative");
    if (workers < 1) throw Error(Errc::invalid_argument, "workers must be >= 1");
  }
};

enum class SolveStatus { Converged, MaxIters, Diverged, Blowup, Stopped };

inline const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIters: return "max-iters";
    case SolveStatus::Diverged: return "diverged";
    case SolveStatus::Blowup: return "blowup";
    case SolveStatus::Stopped: return "stopped";
  }
  return "?";
}

struct SolveReport {
  int iterations = 0;
  std::vector<double> residual_history;
  bool converged = false;
  SolveStatus status = SolveStatus::MaxIters;
  ScalarField field;
};

// Called after each residual evaluation with (sweep, field, per-slot residual);
// returning true stops the iteration with status Stopped.
using SweepMonitor = std::function<bool(int, const ScalarField&, const std::vector<double>&)>;

namespace detail {

struct Relaxer {
  const SampledCoeffs& cf;
  const Reaction& f;
  const std::vector<double>* shift = nullptr;  // per-slot additive term
  const SolverConfig& cfg;

  SolveReport run(ScalarField u, const SweepMonitor& monitor = {}) const {
    const DomainMask& m = *u.mask;
    const std::size_t n = m.interior.size();
    const int dim = m.grid.dim;
    std::vector<Point> xs(n);
    for (std::size_t s = 0; s < n; ++s) xs[s] = m.grid.coord(m.interior[s]);
    std::vector<double> R(n), geo(n), G(n), fs(n);
    std::vector<char> bad(n, 0);
    std::vector<double> steps;
    SolveReport rep;

    for (int it = 0;; ++it) {
      const double eps = flat_threshold(u);
      parallel_for(n, cfg.workers, [&](std::size_t s) {
        const double ui = u.values[m.interior[s]];
        const NodeEval e = eval_node(u, s, cf, eps);
        double fv = 0.0;
        if (f) {
          fv = f.value(xs[s], ui);
          fs[s] = std::abs(f.slope(xs[s], ui));
          bad[s] = !std::isfinite(fv);
        } else {
          fs[s] = 0.0;
        }
        R[s] = e.L + fv - cf.h[s] + (shift ? (*shift)[s] : 0.0);
        geo[s] = e.geo;
        G[s] = e.gscale;
      });
      for (std::size_t s = 0; s < n; ++s)
        if (bad[s])
          throw Error(Errc::domain_error, "reaction undefined at node " + format_point(xs[s], dim) + " for value " +
                                              std::to_string(u.values[m.interior[s]]));
      double res = 0.0, gmax = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        res = std::max(res, std::abs(R[s]));
        gmax = std::max(gmax, G[s]);
      }
      if (!std::isfinite(res)) {
        rep.status = SolveStatus::Diverged;
        break;
      }
      rep.residual_history.push_back(res);
      if (res <= cfg.tol_residual) {
        rep.status = SolveStatus::Converged;
        rep.converged = true;
        break;
      }
      if (monitor && monitor(it, u, R)) {
        rep.status = SolveStatus::Stopped;
        break;
      }
      if (it >= cfg.max_iters) {
        rep.status = SolveStatus::MaxIters;
        break;
      }
      // Divergence needs both the residual and the step size sup |dt R| to grow. The residual
      // alone spikes at nodes with very short clipped arms; the step alone jumps when a
      // non-Lipschitz reaction switches off at zero.
      const std::size_t w = static_cast<std::size_t>(cfg.divergence_window);
      const auto& hist = rep.residual_history;
      auto grew = [&](const std::vector<double>& v) {
        return v.size() > w && v.back() > cfg.divergence_factor * v[v.size() - 1 - w];
      };
      if (grew(steps) && grew(hist)) {
        rep.status = SolveStatus::Diverged;
        break;
      }
      // One pseudo-time step for the whole field: the gradient factor and the reaction
      // slope enter through their sweep maxima; only the arm geometry is node-local.
      double lip = 0.0;
      for (std::size_t s = 0; s < n; ++s) lip = std::max(lip, fs[s]);
      const double gfac = gpow(std::max(gmax, cfg.gradient_floor), cf.gamma);
      double umax = 0.0, smax = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        const double diag = gfac * geo[s] + lip;
        const double dt = cfg.cfl_safety / diag;
        double& ui = u.values[m.interior[s]];
        ui += dt * R[s];
        umax = std::max(umax, std::abs(ui));
        smax = std::max(smax, std::abs(dt * R[s]));
      }
      steps.push_back(smax);
      rep.iterations = it + 1;
      if (!(umax <= cfg.blowup_cap)) {
        rep.status = SolveStatus::Blowup;
        break;
      }
    }
    rep.field = std::move(u);
    return rep;
  }
};

}  // namespace detail

// Pseudo-time iteration u <- u + dt * residual on Interior with Dirichlet values pinned.
inline SolveReport relax_to_steady(const ScalarField& u0, const CoefficientSet& coeffs, const Reaction& F,
                                   const Sampler& g, const SolverConfig& cfg, const SweepMonitor& monitor = {}) {
  cfg.validate();
  const detail::SampledCoeffs cf(coeffs, *u0.mask);
  ScalarField u = u0;
  if (g) set_boundary(u, g);
  for (auto i : u.mask->interior)
    if (!std::isfinite(u.values[i])) throw Error(Errc::non_finite, "initial field is not finite");
  detail::Relaxer rx{cf, F, nullptr, cfg};
  return rx.run(std::move(u), monitor);
}

struct MonotoneReport {
  SolveReport final;
  std::vector<ScalarField> stack;        // iterates u_1, u_2, ... when keep_stack is set
  std::vector<double> max_increase;      // max_i (u_{k+1} - u_k) per outer step
  int outer_iterations = 0;
  int inner_sweeps = 0;
};

// Solves L u_{k+1} - sigma u_{k+1} = f(x,u_k) - sigma u_k from u_1 = start.
inline MonotoneReport monotone_iteration(const Reaction& f, const ScalarField& start, const CoefficientSet& coeffs,
                                         const Sampler& g, const SolverConfig& cfg) {
  cfg.validate();
  const DomainMask& m = *start.mask;
  const std::size_t n = m.interior.size();
  const int dim = m.grid.dim;
  const detail::SampledCoeffs cf(coeffs, m);
  const double sigma = cfg.sigma;
  Reaction lin;
  lin.f = [sigma](const Point&, double s) { return -sigma * s; };
  lin.df = [sigma](const Point&, double) { return -sigma; };
  std::vector<Point> xs(n);
  for (std::size_t s = 0; s < n; ++s) xs[s] = m.grid.coord(m.interior[s]);

  MonotoneReport out;
  ScalarField u = start;
  if (g) set_boundary(u, g);
  if (cfg.keep_stack) out.stack.push_back(u);
  std::vector<double> shift(n);
  SolverConfig inner = cfg;
  for (int k = 0;; ++k) {
    // Residual of the original problem decides convergence.
    double res = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const double ui = u.values[m.interior[s]];
      const double fv = reaction_at(f, xs[s], ui, dim);
      shift[s] = fv + sigma * ui;
    }
    {
      const double eps = detail::flat_threshold(u);
      for (std::size_t s = 0; s < n; ++s) {
        const double L = detail::eval_node(u, s, cf, eps).L;
        res = std::max(res, std::abs(L + shift[s] - sigma * u.values[m.interior[s]] - cf.h[s]));
      }
    }
    out.final.residual_history.push_back(res);
    if (res <= cfg.tol_residual) {
      out.final.converged = true;
      out.final.status = SolveStatus::Converged;
      break;
    }
    if (k >= cfg.max_outer) {
      out.final.status = SolveStatus::MaxIters;
      break;
    }
    detail::Relaxer rx{cf, lin, &shift, inner};
    SolveReport r = rx.run(u);
    out.inner_sweeps += r.iterations;
    if (r.status == SolveStatus::Diverged || r.status == SolveStatus::Blowup) {
      out.final.status = r.status;
      break;
    }
    double inc = -INFINITY;
    for (auto i : m.interior) inc = std::max(inc, r.field.values[i] - u.values[i]);
    out.max_increase.push_back(inc);
    if (inc > 10.0 * cfg.tol_residual)
      throw Error(Errc::non_monotone, "iterate " + std::to_string(k + 2) + " exceeds its predecessor by " +
                                          std::to_string(inc) + " (sigma too small?)");
    u = std::move(r.field);
    ++out.outer_iterations;
    if (cfg.keep_stack) out.stack.push_back(u);
  }
  out.final.iterations = out.outer_iterations;
  out.final.field = std::move(u);
  return out;
}

}  // namespace ilab
