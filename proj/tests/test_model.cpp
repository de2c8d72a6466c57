#include <doctest.h>

#include <cmath>
#include <random>

#include "twolevel/model.hpp"

using namespace twolevel;

TEST_CASE("derived constants") {
  LaserParamsd p{1.0, 0.8, 0.0, 100, 0.0};
  CHECK(p.gamma_c() == doctest::Approx(5.0).epsilon(1e-15));

  p = {1.0, 20.0, 2.0, 100, 0.0};
  auto c = derive_constants(p);
  CHECK(c.gamma_c == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(c.eta == doctest::Approx(2.2).epsilon(1e-15));
  CHECK(c.coupling_lambda == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(c.eta >= c.gamma_c);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(derive_constants(LaserParamsd{0.0, 1.0, 1.0, 10, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(derive_constants(LaserParamsd{-1.0, 1.0, 1.0, 10, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(derive_constants(LaserParamsd{1.0, 0.0, 1.0, 10, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(derive_constants(LaserParamsd{1.0, 1.0, -0.1, 10, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(derive_constants(LaserParamsd{1.0, 1.0, 1.0, 0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(LaserParamsd::from_rates(0.0, 1.0, 1.0, 10), std::invalid_argument);
  CHECK_NOTHROW(derive_constants(LaserParamsd{1.0, 1.0, 0.0, 1, 0.0}));
}

TEST_CASE("from_rates reproduces gamma_c") {
  auto p = LaserParamsd::from_rates(0.2, 20.0, 2.0, 100);
  CHECK(p.g == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p.gamma_c() == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("gamma_c invariant under g -> s g, kappa -> s^2 kappa") {
  const LaserParamsd p{0.7, 3.0, 1.0, 50, 0.0};
  for (double s : {1e-3, 0.1, 0.5, 2.0, 17.0, 1e3}) {
    LaserParamsd q = p;
    q.g *= s;
    q.kappa *= s * s;
    CHECK(q.gamma_c() == doctest::Approx(p.gamma_c()).epsilon(1e-14));
  }
}

TEST_CASE("regime examples") {
  auto at = classify_regime(LaserParamsd::from_rates(0.2, 20.0, 0.2, 100));
  CHECK(at.kind == RegimeKind::AtThreshold);

  auto wat = classify_regime(LaserParamsd::from_rates(0.2, 20.0, 2.0, 100), {1e-6, 0.1});
  CHECK(wat.kind == RegimeKind::WellAboveThreshold);
  CHECK(wat.ratio == doctest::Approx(0.1).epsilon(1e-13));

  auto above = classify_regime(LaserParamsd::from_rates(0.2, 20.0, 2.0, 100));
  CHECK(above.kind == RegimeKind::AboveThreshold);

  auto below = classify_regime(LaserParamsd::from_rates(5.0, 1.0, 1.0, 100));
  CHECK(below.kind == RegimeKind::BelowThreshold);
  CHECK_FALSE(below.degenerate);

  auto unpumped = classify_regime(LaserParamsd::from_rates(5.0, 1.0, 0.0, 100));
  CHECK(unpumped.kind == RegimeKind::BelowThreshold);
  CHECK(unpumped.degenerate);
  CHECK(std::isinf(unpumped.ratio));

  CHECK(to_string(RegimeKind::WellAboveThreshold) == "well_above_threshold");
}

TEST_CASE("regime tolerances are validated") {
  auto p = LaserParamsd::from_rates(0.2, 20.0, 2.0, 100);
  CHECK_THROWS_AS(classify_regime(p, {0.0, 0.01}), std::invalid_argument);
  CHECK_THROWS_AS(classify_regime(p, {1.0, 0.01}), std::invalid_argument);
  CHECK_THROWS_AS(classify_regime(p, {1e-6, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(classify_regime(p, {1e-6, 1.5}), std::invalid_argument);
}

TEST_CASE("regime invariants over random parameters") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> log_u(-3.0, 3.0);
  std::uniform_real_distribution<double> near(-3e-6, 3e-6);
  const RegimeTolerances tol{};
  for (int i = 0; i < 2000; ++i) {
    const double gc = std::pow(10.0, log_u(rng));
    const double ra = (i % 3 == 0) ? gc * (1 + near(rng)) : std::pow(10.0, log_u(rng));
    const auto p = LaserParamsd::from_rates(gc, 1.0, ra, 10);
    const auto r = classify_regime(p, tol);
    const double g = p.gamma_c();
    const bool at = std::abs(g - ra) <= tol.tol_rel * std::max(g, ra);
    CHECK((r.kind == RegimeKind::AtThreshold) == at);
    if (r.kind == RegimeKind::WellAboveThreshold) {
      CHECK(g < ra);
      CHECK(g <= tol.eps_wat * ra);
    }
    if (r.kind == RegimeKind::AboveThreshold) CHECK(g < ra);

    for (double s : {1e-2, 3.0, 1e4}) {
      const auto q = LaserParamsd::from_rates(g * s, 1.0, ra * s, 10);
      const auto rq = classify_regime(q, tol);
      // Scaling only perturbs gamma_c in the last bits; skip points on a boundary.
      const double rel_gap = std::abs(g - ra) / std::max(g, ra);
      const bool on_edge = std::abs(rel_gap - tol.tol_rel) < 1e-12 ||
                           std::abs(g / ra - tol.eps_wat) < 1e-12;
      if (!on_edge) CHECK(rq.kind == r.kind);
    }
  }
}

TEST_CASE("cast to long double keeps values") {
  const LaserParamsd p{1.0, 20.0, 2.0, 100, 3.0};
  const auto q = p.cast<long double>();
  CHECK(static_cast<double>(q.eta()) == doctest::Approx(p.eta()).epsilon(1e-15));
  CHECK(q.n_atoms == p.n_atoms);
  CHECK(q.cast<double>() == p);
}
