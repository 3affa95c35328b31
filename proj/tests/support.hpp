#pragma once

#include "ilab/ilab.hpp"

#include <doctest.h>

#include <random>

namespace t {

using namespace ilab;

// Seeds come from ILAB_TEST_SEED when set so a failing draw can be replayed.
inline std::uint64_t base_seed() {
  const char* s = std::getenv("ILAB_TEST_SEED");
  return s ? std::strtoull(s, nullptr, 10) : 20261016ULL;
}

struct Rng {
  std::mt19937_64 g;
  explicit Rng(std::uint64_t salt) : g(base_seed() ^ (salt * 0x9E3779B97F4A7C15ULL)) {}
  double uni(double a, double b) { return std::uniform_real_distribution<double>(a, b)(g); }
  int pick(int a, int b) { return std::uniform_int_distribution<int>(a, b)(g); }
};

inline SolverConfig tight(double tol = 1e-10, int iters = 2000000) {
  SolverConfig sc;
  sc.tol_residual = tol;
  sc.max_iters = iters;
  return sc;
}

inline CoefficientSet gamma_only(double g, Scheme s = Scheme::Flux) {
  CoefficientSet cs;
  cs.gamma = g;
  cs.scheme = s;
  return cs;
}

inline MaskPtr line(double a, double b, double h) { return build_mask(Grid::cube(1, a, b, h), Box{{a, 0, 0}, {b, 0, 0}}); }

inline MaskPtr segment_ball(double R, double h) { return build_mask(Grid::cube(1, -R, R, h), Ball{{0, 0, 0}, R}); }

inline std::size_t at(const MaskPtr& m, Point x) {
  const auto i = node_at(m->grid, x);
  REQUIRE(i.has_value());
  return *i;
}

inline double sup_interior_gap(const ScalarField& a, const ScalarField& b) {
  double g = 0.0;
  for (auto i : a.mask->interior) g = std::max(g, std::abs(a.values[i] - b.values[i]));
  return g;
}

}  // namespace t
