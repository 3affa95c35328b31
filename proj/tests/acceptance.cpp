// Acceptance run: one PASS/FAIL line per criterion. Usage: acceptance <path to ilab_cli>
#include "ilab/ilab.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

using namespace ilab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
  if (!ok) ++failures;
  std::cout << "criterion " << n << " " << (ok ? "PASS" : "FAIL") << ": " << detail << std::endl;
}

SolverConfig tight(double tol) {
  SolverConfig s;
  s.tol_residual = tol;
  s.max_iters = 2000000;
  return s;
}

EigenConfig eig(double bracket_tol = -1.0) {
  EigenConfig e;
  e.solver = tight(1e-10);
  e.bracket_tol = bracket_tol;
  return e;
}

CoefficientSet coeffs(double gamma, Sampler c = {}) {
  CoefficientSet cs;
  cs.gamma = gamma;
  cs.c = std::move(c);
  return cs;
}

MaskPtr segment(double R, double h, double x0 = 0.0) {
  return build_mask(Grid::cube(1, -2, 2, h), Ball{{x0, 0, 0}, R});
}

double mid(const EigenResult& r) { return 0.5 * (r.lambda_lo + r.lambda_hi); }

// Eigenfunctions computed along the way, checked for a Hopf slope in criterion 9.
std::vector<std::pair<ScalarField, Ball>> eigenfunctions;

EigenResult eigen_on(const MaskPtr& m, const CoefficientSet& cs, const EigenConfig& e) {
  EigenResult r = principal_eigenvalue(m, cs, e);
  eigenfunctions.emplace_back(r.eigenfunction, std::get<Ball>(m->shape));
  return r;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

void criterion1() {
  bool ok = true;
  double worst_rel = 0.0, worst_time = 0.0;
  int cases = 0;
  for (const RadialProfile& p : oracle_profiles())
    for (double g : {0.0, 1.0, 2.0}) {
      const auto t0 = Clock::now();
      const OracleRow row = oracle_convergence(OracleCase{p, g}, 0.02, 2);
      const double dt = seconds_since(t0);
      ok = ok && row.decreasing && row.fine_ok && dt <= 60.0;
      worst_rel = std::max(worst_rel, row.rel_err.back());
      worst_time = std::max(worst_time, dt);
      ++cases;
    }
  report(1, ok, std::to_string(cases) + " profile/gamma cases, errors decrease from h to h/2, worst finest rel err " +
                    fmt(worst_rel) + ", slowest case " + fmt(1e3 * worst_time) + " ms");
}

void criterion2() {
  const SharpnessReport r = sharpness_witness(1e-3, 3.0);
  report(2, r.max_deviation <= 1e-2 && r.max_residual <= 0.0,
         "deviation " + fmt(r.max_deviation) + ", max residual " + fmt(r.max_residual));
}

void criterion3() {
  const double pi24 = std::numbers::pi * std::numbers::pi / 4;
  const auto t0 = Clock::now();
  const EigenResult r = eigen_on(segment(1, 1.0 / 200), coeffs(2.0), eig());
  const double dt = seconds_since(t0);
  const bool ok = r.lambda_lo <= pi24 && pi24 <= r.lambda_hi && r.lambda_hi - r.lambda_lo <= 0.05 && dt <= 300;
  report(3, ok, "bracket [" + fmt(r.lambda_lo) + ", " + fmt(r.lambda_hi) + "] vs " + fmt(pi24) + ", " + fmt(dt) + " s");
}

void criterion4() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(-3, 3);
  const double h = 1.0 / 50;
  const Sampler c0([](const Point& x) { return x[0] * x[0]; });

  bool shift_ok = true;
  double shift_worst = 0.0;
  const EigenResult base = eigen_on(segment(1, h), coeffs(2.0, c0), eig());
  for (int k = 0; k < 5; ++k) {
    const double t = U(rng);
    const EigenResult r = eigen_on(segment(1, h), coeffs(2.0, Sampler([c0, t](const Point& x) { return c0(x) + t; })), eig());
    const double err = std::abs(mid(r) - (mid(base) - t));
    shift_worst = std::max(shift_worst, err);
    shift_ok = shift_ok && err <= r.bracket_tol;
  }

  bool mono_ok = true;
  std::vector<double> lams;
  for (double R : {0.8, 1.0, 1.25, 1.5}) {
    const EigenResult r = eigen_on(segment(R, h), coeffs(2.0, c0), eig());
    if (!lams.empty() && !(r.lambda_lo <= lams.back() + r.bracket_tol)) mono_ok = false;
    lams.push_back(r.lambda_lo);
  }

  bool ratio_ok = true;
  std::string ratios;
  const std::pair<Sampler, double> pots[] = {{Sampler([](const Point& x) { return -x[0] * x[0]; }), 0.0},
                                             {Sampler([](const Point& x) { return 1 - x[0] * x[0]; }), 1.0}};
  for (const auto& [c, sup_c] : pots) {
    const auto tab = scaling_limit_check({64.0}, segment(1, h), coeffs(2.0, c), eig());
    ratio_ok = ratio_ok && std::abs(tab.back().second + sup_c) <= 0.15;
    ratios += " " + fmt(tab.back().second) + " (target " + fmt(-sup_c) + ")";
  }
  report(4, shift_ok && mono_ok && ratio_ok,
         "shift err " + fmt(shift_worst) + ", nested balls monotone " + (mono_ok ? "yes" : "no") + ", ratios at 64:" + ratios);
}

void criterion5() {
  std::mt19937_64 rng(5);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  const double tol = 1e-9;
  double worst = -INFINITY;
  bool ok = true;
  for (int k = 0; k < 50; ++k) {
    const int dim = k % 2 + 1;
    const MaskPtr m = dim == 1 ? build_mask(Grid::cube(1, -1, 1, 0.05), Ball{{0, 0, 0}, 1})
                               : build_mask(Grid::cube(2, -1, 1, 0.125), Ball{{0, 0, 0}, 1});
    const double g = std::array<double, 3>{0.0, 1.0, 2.0}[k % 3];
    const double c0 = uni(-3, -0.5), c1 = uni(-0.4, 0.4), a = uni(-1, 1), b = uni(-1, 1);
    const double f0 = uni(-1, 1), f1 = uni(-1, 1), lift = uni(0, 1);
    const Reaction F = reactions::potential(Sampler([c0, c1](const Point& x) { return c0 + c1 * x[0] * x[0]; }), g);
    const Sampler bc([a, b](const Point& x) { return a + b * x[0]; });
    CoefficientSet cs1 = coeffs(g), cs2 = coeffs(g);
    cs2.h_rhs = Sampler([f0, f1](const Point& x) { return f0 + f1 * x[0]; });
    cs1.h_rhs = Sampler([f0, f1, lift](const Point& x) { return f0 + f1 * x[0] + lift * (1 + x[0] * x[0]); });
    const SolveReport u1 = relax_to_steady(ScalarField(m, 0.0), cs1, F, bc, tight(tol));
    const SolveReport u2 = relax_to_steady(ScalarField(m, 0.0), cs2, F, bc, tight(tol));
    if (!u1.converged || !u2.converged) ok = false;
    double v = -INFINITY;
    for (auto i : m->interior) v = std::max(v, u1.field.values[i] - u2.field.values[i]);
    worst = std::max(worst, v);
  }
  ok = ok && worst <= 2 * tol;
  report(5, ok, "50 instances, largest ordering violation " + fmt(worst) + " (allowed " + fmt(2 * tol) + ")");
}

KppConfig kpp_config(double g) {
  KppConfig c;
  c.gamma = g;
  c.h = 0.1;
  c.bump_delta = 0.5;
  c.bump_epsilon = 0.2;
  c.solver = tight(1e-8);
  return c;
}

void criterion6() {
  bool ok = true;
  int radii = 0;
  double worst_sandwich = INFINITY;
  for (double g : {0.0, 2.0}) {
    const KppConfig c = kpp_config(g);
    const WholeSpaceResult w = solve_kpp_whole_space(Nonlinearity::kpp(g), DriftSpec::none(), {5, 10, 20}, c);
    for (const auto& t : w.trace) {
      ok = ok && t.descent_ok && t.sandwich_low >= -c.solver.tol_residual;
      worst_sandwich = std::min(worst_sandwich, t.sandwich_low);
      ++radii;
    }
  }
  report(6, ok, std::to_string(radii) + " ball solves, stacks non-increasing within tol, smallest u - bump " + fmt(worst_sandwich));
}

void criterion7() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (double g : {0.0, 2.0}) {
    const KppConfig c = kpp_config(g);
    const UniquenessReport u = uniqueness_probe(Nonlinearity::kpp(g), DriftSpec::none(), {5, 10, 20}, c);
    const AsymptoticsReport a = asymptotics_check(u.limits.front(), 1.0, 0.0, 10.0, 1e-2);
    ok = ok && a.pass && u.gap_two_start <= 3 * c.solver.tol_residual;
    detail += "gamma " + fmt(g) + ": inner-half margin " + fmt(a.margin) + ", two-start gap " + fmt(u.gap_two_start) + "; ";
  }
  const double dt = seconds_since(t0);
  report(7, ok && dt <= 900, detail + fmt(dt) + " s");
}

void criterion8() {
  const Sampler a([](const Point& x) { return std::max(-1.0, -x[0] * x[0]); });
  GrowthEnvelope one;
  one.V = Sampler::constant(1.0);
  const NonexistenceReport r =
      nonexistence_check(Nonlinearity::logistic(2.0, a), one, DriftSpec::none(), {5, 10, 20}, kpp_config(2.0));
  report(8, r.certificate_max <= 0.0 && r.final_sup <= 1e-3,
         "gamma 2, f = s(a - s), a = -1 outside the unit ball, envelope 1: certificate max " + fmt(r.certificate_max) +
             ", final sup " + fmt(r.final_sup));
}

void criterion9() {
  bool ok = true;
  double min_margin = INFINITY, worst_rel = 0.0;
  for (double al : {-0.25, -0.5, -0.75}) {
    ExperimentConfig c;
    c.alpha_test = al;
    c.h = 1.0 / 64;
    c.radii = {4};
    const ThetaReport r = certify_theta_subsolution(c);
    ok = ok && r.pass && r.rel_deviation <= 1e-2;
    min_margin = std::min(min_margin, r.min_margin);
    worst_rel = std::max(worst_rel, r.rel_deviation);
  }
  double nu = INFINITY;
  for (const auto& [phi, ball] : eigenfunctions) nu = std::min(nu, hopf_fit(phi, ball));
  ok = ok && !eigenfunctions.empty() && nu > 0.0;
  report(9, ok, "theta margin " + fmt(min_margin) + ", closed-form rel dev " + fmt(worst_rel) + ", Hopf nu over " +
                    std::to_string(eigenfunctions.size()) + " eigenfunctions >= " + fmt(nu));
}

int run_cli(const std::string& cli, const fs::path& cfg, const fs::path& out, int workers) {
  const std::string cmd = cli + " solve --config " + cfg.string() + " --out " + out.string() + " --workers " +
                          std::to_string(workers) + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

void criterion10(const std::string& cli) {
  const fs::path dir = fs::temp_directory_path() / ("ilab_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const json cfg = {
      {"operator", {{"gamma", 0.0}}},
      {"domain", {{"dim", 2}, {"h", 1.0 / 32}, {"shape", {{"type", "box"}, {"lo", {-1, -1}}, {"hi", {1, 1}}}}}},
      {"solver", {{"tol_residual", 1e-6}}},
      {"problem", {{"boundary", {{"type", "aronsson"}}}}}};
  write_text(dir / "config.json", cfg.dump(2));
  const int r1 = run_cli(cli, dir / "config.json", dir / "w1", 1), r4 = run_cli(cli, dir / "config.json", dir / "w4", 4);
  bool same = r1 == 0 && r4 == 0;
  std::string files;
  if (same)
    for (const char* f : {"field.csv", "trace.csv"}) {
      same = same && read_text(dir / "w1" / f) == read_text(dir / "w4" / f);
      files += std::string(" ") + f;
    }
  const json meta = same ? json::parse(read_text(dir / "w1" / "meta.json")) : json();
  const int interior = same ? meta["results"]["nodes_interior"].get<int>() : 0;
  fs::remove_all(dir);
  report(10, same && interior > 2048,
         "2D solve with " + std::to_string(interior) + " interior nodes, exit codes " + std::to_string(r1) + "/" +
             std::to_string(r4) + ", byte-identical:" + (same ? files : " no"));
}

template <class F>
void guarded(int n, F f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(n, false, std::string("threw ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path to ilab_cli>\n";
    return 2;
  }
  guarded(1, criterion1);
  guarded(2, criterion2);
  guarded(3, criterion3);
  guarded(4, criterion4);
  guarded(5, criterion5);
  guarded(6, criterion6);
  guarded(7, criterion7);
  guarded(8, criterion8);
  guarded(9, criterion9);
  guarded(10, [&] { criterion10(argv[1]); });
  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
  return failures == 0 ? 0 : 1;
}
