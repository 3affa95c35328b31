#include "support.hpp"

using namespace t;

namespace {

KppConfig kc(double g, double h = 0.1) {
  KppConfig c;
  c.gamma = g;
  c.h = h;
  c.bump_delta = 0.5;
  c.bump_epsilon = 0.2;
  c.solver = tight(1e-8);
  return c;
}

DriftSpec radial_decay(double k) {
  DriftSpec d;
  d.q = VectorSampler([k](const Point& x) { return Point{k * x[0] / (1 + x[0] * x[0]), 0, 0}; });
  d.env = [k](double r) { return r < 1.0 ? 0.5 * k : k * r / (1.0 + r * r); };
  return d;
}

// |q| = r (1 - r^2) inside the unit ball, zero outside.
DriftSpec compact_drift() {
  DriftSpec d;
  d.q = VectorSampler([](const Point& x) { return Point{x[0] * std::max(0.0, 1 - x[0] * x[0]), 0, 0}; });
  d.env = [](double r) { return r <= 1.0 ? 0.3849002 : 0.0; };  // max of r (1 - r^2)
  return d;
}

const std::vector<double> kRadii{5, 10, 20};

}  // namespace

TEST_CASE("compactly supported bump") {
  const Grid g = Grid::cube(1, -6, 6, 1.0 / 40);
  const BumpCertificate b = bump_subsolution(g, {0, 0, 0}, 0.2, 0.5, gamma_only(0.0));
  CHECK(b.field.values[at(b.field.mask, {0, 0, 0})] == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  const auto& m = *b.field.mask;
  for (auto i : m.active())
    if (std::abs(m.grid.coord(i)[0]) >= 5 - 1e-12) CHECK(b.field.values[i] <= 1e-12);
  for (double v : b.field.surface) CHECK(v <= 1e-12);
  for (double g2 : {0.0, 1.0, 2.0}) {
    CAPTURE(g2);
    const BumpCertificate c = bump_subsolution(g, {0, 0, 0}, 0.2, 0.5, gamma_only(g2));
    CHECK(c.pass);
    CHECK(c.min_margin > 0);
  }
  // a tiny delta cannot absorb the concavity at the top of the bump
  const BumpCertificate bad = bump_subsolution(g, {0, 0, 0}, 0.2, 1e-3, gamma_only(0.0));
  CHECK_FALSE(bad.pass);
  CHECK_FALSE(bad.failing.empty());
  // drift larger than eps on the bump ball is refused
  CHECK_THROWS_AS(bump_subsolution(Grid::cube(1, -12, 12, 0.1), {0, 0, 0}, 0.2, 0.5, gamma_only(0.0), radial_decay(1.0)),
                  Error);
  CHECK_THROWS_AS(bump_subsolution(g, {0, 0, 0}, 0.0, 0.5, gamma_only(0.0)), Error);
}

TEST_CASE("KPP on a single ball") {
  SUBCASE("s^3 (1 - s), radius 10") {
    const KppBallResult r = solve_kpp_ball(10, Nonlinearity::kpp(0.0), DriftSpec::none(), kc(0.0));
    CHECK(r.center_value >= 0.95);
    CHECK(r.sandwich_low >= -1e-8);
    CHECK(r.sandwich_high >= -1e-8);
  }
  SUBCASE("zero reaction gives zero") {
    KppConfig c = kc(2.0);
    c.bump_scale = 0.0;  // f = 0 admits no positive subsolution
    const KppBallResult r = solve_kpp_ball(10, Nonlinearity::zero(), DriftSpec::none(), c);
    CHECK(r.field.interior_max() <= 1e-5);
    CHECK(r.field.interior_min() >= 0.0);
  }
  SUBCASE("s (a - b s^3) with a, b -> 1") {
    Nonlinearity nl = Nonlinearity::power_law(1.0, Sampler([](const Point& x) { return 1 + 0.5 * std::exp(-x[0] * x[0]); }),
                                              Sampler::constant(1.0));
    nl.M = 1.2;
    const KppBallResult r = solve_kpp_ball(10, nl, DriftSpec::none(), kc(0.0));
    MESSAGE("center " << r.center_value);
    CHECK(r.center_value >= 0.8);
    CHECK(r.center_value <= 1.2);
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(solve_kpp_ball(4, Nonlinearity::kpp(0.0), DriftSpec::none(), kc(0.0)), Error);  // bump does not fit
    Nonlinearity bad = Nonlinearity::kpp(0.0);
    bad.M = 0.5;  // f(M) > 0
    CHECK_THROWS_AS(solve_kpp_ball(10, bad, DriftSpec::none(), kc(0.0)), Error);
    CHECK_THROWS_AS(solve_kpp_ball(10, Nonlinearity::absorption(0.0), DriftSpec::none(), kc(0.0)), Error);
  }
}

TEST_CASE("whole-space limits") {
  SUBCASE("s^{3-g}(1 - s) tends to one") {
    for (double g : {0.0, 2.0}) {
      CAPTURE(g);
      // the boundary layer is wider at gamma = 2, so the schedule starts further out
      const std::vector<double> radii = g == 2.0 ? std::vector<double>{10, 20, 40} : kRadii;
      const WholeSpaceResult w = solve_kpp_whole_space(Nonlinearity::kpp(g), DriftSpec::none(), radii, kc(g));
      CHECK(w.converged);
      const AsymptoticsReport a = asymptotics_check(w.field, 1.0, 0.0, 10.0, 1e-2);
      CHECK(a.pass);
      for (const auto& t : w.trace) {
        CHECK(t.descent_ok);
        CHECK(t.sandwich_low >= -1e-8);
        CHECK(t.inner_min > 0.0);
      }
      // Cauchy gaps shrink along the schedule
      CHECK(w.trace[2].cauchy <= w.trace[1].cauchy);
    }
  }
  SUBCASE("absorption tends to zero") {
    KppConfig c = kc(2.0);
    c.bump_scale = 0.0;
    const WholeSpaceResult w = solve_kpp_whole_space(Nonlinearity::absorption(2.0), DriftSpec::none(), kRadii, c);
    CHECK(w.field.interior_max() <= 1e-6);
  }
  SUBCASE("vanishing drift x/(1+x^2)") {
    KppConfig c = kc(0.0);
    c.bump_epsilon = 0.15;
    const WholeSpaceResult w = solve_kpp_whole_space(Nonlinearity::kpp(0.0), radial_decay(1.0), {24, 48}, c);
    const AsymptoticsReport a = asymptotics_check(w.field, 1.0, 0.0, 24.0, 2e-2);
    MESSAGE("bump center " << w.bump_center[0] << ", inner-half margin " << a.margin);
    CHECK(a.pass);
  }
  CHECK_THROWS_AS(solve_kpp_whole_space(Nonlinearity::kpp(0.0), DriftSpec::none(), {10, 5}, kc(0.0)), Error);
  CHECK_THROWS_AS(solve_kpp_whole_space(Nonlinearity::kpp(0.0), DriftSpec::none(), {}, kc(0.0)), Error);
}

TEST_CASE("asymptotic level") {
  const MaskPtr m = segment_ball(10, 0.1);
  const AsymptoticsReport same = asymptotics_check(ScalarField(m, 0.7), 0.7, 5, 10, 1e-12);
  CHECK(same.pass);
  CHECK(same.margin == 0.0);
  const AsymptoticsReport half = asymptotics_check(ScalarField(m, 0.35), 0.7, 5, 10, 1e-2);
  CHECK_FALSE(half.pass);
  CHECK(half.deficit == doctest::Approx(0.35));
  CHECK_THROWS_AS(asymptotics_check(ScalarField(m, 1.0), 1.0, 5, 4, 1e-2), Error);

  const WholeSpaceResult w = solve_kpp_whole_space(Nonlinearity::kpp(0.0), DriftSpec::none(), kRadii, kc(0.0));
  const AsymptoticsReport far = asymptotics_check(w.field, 1.0, 8, 10, 0.1);
  CHECK(far.min >= 0.9);
  CHECK(far.max <= 1.1);
}

TEST_CASE("uniqueness probe") {
  SUBCASE("two starts agree") {
    for (double g : {0.0, 2.0}) {
      CAPTURE(g);
      const UniquenessReport u = uniqueness_probe(Nonlinearity::kpp(g), DriftSpec::none(), kRadii, kc(g));
      MESSAGE("gap " << u.gap_two_start << ", with bump seed " << u.gap_all);
      CHECK(u.agree);
      CHECK(u.gap_all <= 1e-2);
    }
  }
  SUBCASE("compactly supported drift") {
    const UniquenessReport u = uniqueness_probe(Nonlinearity::kpp(0.0), compact_drift(), {12, 24}, kc(0.0));
    CHECK(u.gap_two_start <= 1e-2);
    CHECK(u.gap_all <= 1e-2);
  }
  SUBCASE("vanishing small-s rate is refused") {
    try {
      uniqueness_probe(Nonlinearity::zero(), DriftSpec::none(), kRadii, kc(0.0));
      FAIL("expected a precondition error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::precondition);
    }
  }
}

TEST_CASE("nonexistence") {
  // f = s (a - s) with a <= 0 everywhere and a = -1 outside the unit ball
  const Sampler a([](const Point& x) { return std::max(-1.0, -x[0] * x[0]); });
  GrowthEnvelope one;
  one.V = Sampler::constant(1.0);
  SUBCASE("constant envelope, collapse at gamma = 2") {
    const Nonlinearity nl = Nonlinearity::logistic(2.0, a);
    const NonexistenceReport r = nonexistence_check(nl, one, DriftSpec::none(), kRadii, kc(2.0));
    MESSAGE("final sup " << r.final_sup);
    CHECK(r.certificate_max <= 0.0);
    CHECK(r.collapsed);
  }
  SUBCASE("positive rate fails the constant envelope") {
    try {
      nonexistence_check(Nonlinearity::kpp(2.0), one, DriftSpec::none(), kRadii, kc(2.0));
      FAIL("expected a certificate failure");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::certificate_failed);
    }
  }
  SUBCASE("inward drift with an exponential envelope") {
    const double kappa = 1.0, delta = kappa / 2;
    DriftSpec d;
    d.q = VectorSampler([kappa](const Point& x) { return Point{-kappa * x[0] / std::max(std::abs(x[0]), 1.0), 0, 0}; });
    d.vanishing = false;
    d.env = [kappa](double) { return kappa; };
    GrowthEnvelope env;
    env.V = Sampler([delta](const Point& x) { return std::exp(delta * std::sqrt(1 + x[0] * x[0])); });
    env.inf_V = 1.0;
    const Sampler ell([](const Point& x) { return std::abs(x[0]) < 2 ? -1.0 : 0.125; });
    const MaskPtr m = segment_ball(20, 0.1);
    CoefficientSet cs = gamma_only(2.0);
    cs.q = d.q;
    CHECK(envelope_certificate(m, env, ell, cs) <= 0.0);
    // a positive rate everywhere is too much for the same envelope
    CHECK(envelope_certificate(m, env, Sampler::constant(0.5), cs) > 0.0);
  }
  CHECK_THROWS_AS(nonexistence_check(Nonlinearity::logistic(2.0, a), one, DriftSpec::none(), {}, kc(2.0)), Error);
}

TEST_CASE("scaled solutions are subsolutions") {
  for (double g : {0.0, 2.0}) {
    const KppBallResult r = solve_kpp_ball(10, Nonlinearity::kpp(g), DriftSpec::none(), kc(g));
    const Reaction F = reactions::kpp(g);
    for (double k : {0.3, 0.7, 0.95}) {
      CAPTURE(g);
      CAPTURE(k);
      ScalarField w = r.field;
      for (auto& v : w.values) v *= k;
      for (auto& v : w.surface) v *= k;
      const ScalarField L = apply_L(w, gamma_only(g));
      double worst = INFINITY;
      for (auto i : w.mask->interior)
        worst = std::min(worst, L.values[i] + F.f(w.mask->grid.coord(i), w.values[i]));
      CHECK(worst >= -3e-8);
    }
  }
}
