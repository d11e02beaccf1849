#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "isogplm/objective.hpp"
#include "isogplm/rng.hpp"
#include "isogplm/solver.hpp"
#include "isogplm/spline.hpp"
#include "support/oracles.hpp"

using namespace isogplm;

namespace {

SplineBasis make_basis(int interior, int order) {
  return SplineBasis(build_knots({}, interior, order, KnotPlacement::uniform));
}

}  // namespace

TEST_CASE("uniform knots are equispaced") {
  const KnotSet ks = build_knots({}, 3, 4, KnotPlacement::uniform);
  REQUIRE(ks.interior.size() == 3);
  CHECK(ks.interior[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(ks.interior[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(ks.interior[2] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(ks.full.size() == 3 + 8);
  CHECK(ks.spacing_ratio() == doctest::Approx(1.0));
}

TEST_CASE("degenerate knot set has only boundary knots") {
  for (int order : {2, 3, 4}) {
    const KnotSet ks = build_knots({}, 0, order, KnotPlacement::uniform);
    CHECK(ks.interior.empty());
    REQUIRE(ks.full.size() == static_cast<std::size_t>(2 * order));
    for (int i = 0; i < order; ++i) {
      CHECK(ks.full[i] == 0.0);
      CHECK(ks.full[order + i] == 1.0);
    }
  }
}

TEST_CASE("quantile knots match a sort-based oracle") {
  Rng rng(987654);
  std::vector<double> t(200);
  for (auto& v : t) v = rng.uniform();

  const KnotSet ks = build_knots(t, 4, 4, KnotPlacement::quantile);
  REQUIRE(ks.interior.size() == 4);
  const double targets[] = {0.2, 0.4, 0.6, 0.8};
  for (int i = 0; i < 4; ++i) {
    const double q = oracle::sorted_quantile(t, (i + 1) / 5.0);
    CHECK(ks.interior[i] == doctest::Approx(q).epsilon(1e-12));
    CHECK(std::abs(ks.interior[i] - targets[i]) < 0.05);
  }
}

TEST_CASE("knot construction rejects bad arguments") {
  CHECK_THROWS_AS(build_knots({}, 2, 1, KnotPlacement::uniform), std::invalid_argument);
  // Heavily tied sample: adjacent quantiles coincide.
  std::vector<double> tied(100, 0.5);
  tied[0] = 0.1;
  tied[99] = 0.9;
  try {
    build_knots(tied, 3, 4, KnotPlacement::quantile);
    FAIL("expected an exception for coincident quantile knots");
  } catch (const std::invalid_argument& err) {
    CHECK(std::string(err.what()).find("percentile") != std::string::npos);
  }
}

TEST_CASE("basis size follows the counting convention") {
  for (int order : {2, 3, 4, 5}) {
    for (int m : {0, 1, 3, 8}) {
      CHECK(make_basis(m, order).size() == m + order);
    }
  }
}

TEST_CASE("partition of unity, nonnegativity and local support") {
  for (int order : {2, 3, 4}) {
    for (int m : {0, 2, 5}) {
      const SplineBasis basis = make_basis(m, order);
      for (int g = 0; g <= 1000; ++g) {
        const double t = g / 1000.0;
        const Eigen::VectorXd b = basis.eval(t);
        CHECK(std::abs(b.sum() - 1.0) < 1e-12);
        CHECK(b.minCoeff() >= -1e-14);
        int nonzero = 0;
        for (Eigen::Index j = 0; j < b.size(); ++j)
          if (b[j] > 1e-14) ++nonzero;
        CHECK(nonzero <= order);
      }
    }
  }
}

TEST_CASE("endpoint interpolation with repeated boundary knots") {
  const SplineBasis basis = make_basis(3, 4);
  const Eigen::VectorXd at0 = basis.eval(0.0);
  CHECK(at0[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(at0.tail(basis.size() - 1).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::VectorXd at1 = basis.eval(1.0);
  CHECK(at1[basis.size() - 1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("values match the direct recursion oracle") {
  const SplineBasis basis = make_basis(2, 4);  // cubic, m = 2
  const std::vector<double>& T = basis.knots().full;
  for (double t : {0.0, 0.1, 0.3, 0.5, 0.77, 0.99, 1.0}) {
    const Eigen::VectorXd b = basis.eval(t);
    for (int j = 0; j < basis.size(); ++j) {
      CHECK(b[j] == doctest::Approx(oracle::cox_de_boor(T, j, 4, t)).epsilon(1e-13));
    }
  }
}

TEST_CASE("evaluation outside the unit interval is a domain error") {
  const SplineBasis basis = make_basis(2, 4);
  CHECK_THROWS_AS(basis.eval(-0.01), std::domain_error);
  CHECK_THROWS_AS(basis.eval(1.01), std::domain_error);
}

TEST_CASE("constant coefficients give a constant spline") {
  auto basis = std::make_shared<SplineBasis>(make_basis(4, 4));
  const MonotoneSpline s{basis, Eigen::VectorXd::Constant(basis->size(), 2.5)};
  for (int g = 0; g <= 100; ++g)
    CHECK(s(g / 100.0) == doctest::Approx(2.5).epsilon(1e-13));
}

TEST_CASE("ordered coefficients give a nondecreasing spline") {
  auto basis = std::make_shared<SplineBasis>(make_basis(5, 4));
  Eigen::VectorXd lambda(basis->size());
  for (int j = 0; j < basis->size(); ++j) lambda[j] = 0.3 * j;
  const MonotoneSpline s{basis, lambda};
  double prev = s(0.0);
  for (int g = 1; g <= 1000; ++g) {
    const double cur = s(g / 1000.0);
    CHECK(cur - prev >= -1e-12);
    prev = cur;
  }
}

TEST_CASE("the ordered fallback start evaluates to zero at the origin") {
  auto basis = std::make_shared<SplineBasis>(make_basis(3, 4));
  Eigen::VectorXd lambda(basis->size());
  lambda[0] = lambda[1] = 0.0;
  for (int j = 2; j < basis->size(); ++j) lambda[j] = j - 1.0;
  const MonotoneSpline s{basis, lambda};
  CHECK(s(0.0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("feasibility is exactly the nondecreasing condition") {
  Eigen::Vector3d ok(1.0, 1.0, 2.0);
  CHECK(is_feasible(ok));
  Eigen::Vector3d bad(1.0, 0.999, 2.0);
  CHECK_FALSE(is_feasible(bad));

  Rng rng(13579);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(8);
    for (auto& x : v) x = rng.normal();
    std::sort(v.begin(), v.end());
    Eigen::VectorXd sorted = Eigen::Map<Eigen::VectorXd>(v.data(), 8);
    CHECK(is_feasible(sorted));
  }
}

TEST_CASE("monotone least-squares approximation error shrinks with the basis") {
  // Fit eta0(t) = sin(pi t / 2) by monotone-constrained least squares on a
  // grid and watch the sup-norm error fall as interior knots are added.
  const int n = 1001;
  Eigen::VectorXd t(n), y(n);
  for (int i = 0; i < n; ++i) {
    t[i] = static_cast<double>(i) / (n - 1);
    y[i] = std::sin(std::numbers::pi * t[i] / 2.0);
  }
  const Eigen::MatrixXd X(n, 0);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(n);

  double previous = std::numeric_limits<double>::infinity();
  for (int m : {2, 4, 8, 16}) {
    auto basis = std::make_shared<SplineBasis>(make_basis(m, 4));
    const Objective obj(y, X, basis->design(t),
                        ModelFamily::identity(ScoreKind::classical_square), 1.0, w);
    SolveResult sol = newton_minimize(obj, Eigen::VectorXd(0),
                                      Eigen::VectorXd::Zero(basis->size()));
    if (!is_feasible(sol.lambda)) {
      Eigen::VectorXd start(basis->size());
      start[0] = start[1] = 0.0;
      for (int j = 2; j < basis->size(); ++j) start[j] = j - 1.0;
      sol = active_set_minimize(obj, sol.beta, start);
    }
    const MonotoneSpline fit{basis, sol.lambda};
    double sup = 0.0;
    for (int i = 0; i < n; ++i) sup = std::max(sup, std::abs(fit(t[i]) - y[i]));
    CHECK(sup < previous);
    previous = sup;
  }
  CHECK(previous < 1e-5);
}
