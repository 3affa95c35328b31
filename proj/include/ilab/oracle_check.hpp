#pragma once

#include "ilab/operator.hpp"
#include "ilab/oracles.hpp"

namespace ilab {

struct OracleCase {
  RadialProfile profile;
  double gamma = 0.0;
  double r_lo = 0.5, r_hi = 1.5;  // test annulus
};

struct OracleRow {
  std::string profile;
  double gamma = 0.0;
  std::vector<double> h;
  std::vector<double> abs_err, rel_err;  // per level
  bool decreasing = false;
  bool fine_ok = false;                  // finest rel_err <= 1e-2
};

// Default profile set with parameters whose annulus avoids critical points.
inline std::vector<RadialProfile> oracle_profiles() {
  return {RadialProfile::power(4.0 / 3.0), RadialProfile::exponential(2.0, 2.0), RadialProfile::gaussian(1.0, 2.0),
          RadialProfile::bump(0.5), RadialProfile::rational_decay()};
}

// 1D radial restriction: the profile on [r_lo - pad, r_hi + pad] with exact end values,
// apply_L compared to radial_L_value at nodes inside the annulus.
inline OracleRow oracle_convergence(const OracleCase& oc, double h0, int levels = 2, Scheme scheme = Scheme::Flux) {
  if (levels < 2) throw Error(Errc::invalid_argument, "need at least two refinement levels");
  OracleRow row;
  row.profile = oc.profile.name();
  row.gamma = oc.gamma;
  const RadialProfile p = oc.profile;
  for (int l = 0; l < levels; ++l) {
    const double h = h0 / std::pow(2.0, l);
    const double pad = 0.25 * (oc.r_hi - oc.r_lo);
    const double a = std::max(0.5 * oc.r_lo, oc.r_lo - pad), b = oc.r_hi + pad;
    const Grid g = Grid::cube(1, h * std::floor(a / h), h * std::ceil(b / h), h);
    const MaskPtr m = build_mask(g, Box{{a, 0, 0}, {b, 0, 0}});
    const ScalarField u = sample(Sampler([p](const Point& x) { return p.value(x[0]); }), m);
    CoefficientSet cs;
    cs.gamma = oc.gamma;
    cs.scheme = scheme;
    const ScalarField L = apply_L(u, cs);
    double err = 0.0, sup = 0.0;
    for (auto i : m->interior) {
      const double r = g.coord(i)[0];
      if (r < oc.r_lo - 1e-12 || r > oc.r_hi + 1e-12) continue;
      const double ex = radial_L_value(p, oc.gamma, r);
      err = std::max(err, std::abs(L.values[i] - ex));
      sup = std::max(sup, std::abs(ex));
    }
    row.h.push_back(h);
    row.abs_err.push_back(err);
    row.rel_err.push_back(sup > 0 ? err / sup : err);
  }
  row.decreasing = true;
  for (std::size_t l = 1; l < row.abs_err.size(); ++l)
    if (!(row.abs_err[l] < row.abs_err[l - 1])) row.decreasing = false;
  row.fine_ok = row.rel_err.back() <= 1e-2;
  return row;
}

}  // namespace ilab
