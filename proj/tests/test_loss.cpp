#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "isogplm/loss.hpp"
#include "isogplm/quadrature.hpp"
#include "isogplm/rng.hpp"
#include "support/oracles.hpp"

using namespace isogplm;

namespace {

const ModelFamily kLogGammaT = ModelFamily::log_gamma(ScoreKind::tukey_biweight);
const ModelFamily kLogGammaC = ModelFamily::log_gamma(ScoreKind::classical_square);
const ModelFamily kIdentityT = ModelFamily::identity(ScoreKind::tukey_biweight);
const ModelFamily kLogisticT = ModelFamily::logistic(ScoreKind::tukey_biweight);
const ModelFamily kLogisticC = ModelFamily::logistic(ScoreKind::classical_square);

double fd(const std::function<double(double)>& f, double s, double h = 1e-6) {
  return (f(s + h) - f(s - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("deviance unit values") {
  CHECK(deviance_d(0.0) == 0.0);
  CHECK(deviance_d(1.0) == doctest::Approx(std::exp(1.0) - 2.0).epsilon(1e-14));
  CHECK(deviance_d(-1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  // Series branch joins the direct formula smoothly.
  for (double u : {9e-5, 1.1e-4, -9e-5, -1.1e-4}) {
    const double direct = std::expm1(u) - u;
    CHECK(deviance_d(u) == doctest::Approx(direct).epsilon(1e-9));
  }
  CHECK(deviance_d(800.0) == std::numeric_limits<double>::infinity());
}

TEST_CASE("Tukey score is the exact polynomial capped at one") {
  const ScoreFunction tukey{ScoreKind::tukey_biweight};
  for (double y : {0.0, 0.2, 0.5, 0.9, 0.999}) {
    const double expected = 3 * y * y - 3 * std::pow(y, 4) + std::pow(y, 6);
    CHECK(tukey.phi(y) == doctest::Approx(expected).epsilon(1e-15));
    CHECK(tukey.phi(-y) == tukey.phi(y));
  }
  CHECK(tukey.phi(1.0) == 1.0);
  CHECK(tukey.phi(7.3) == 1.0);
  CHECK(tukey.dphi(1.5) == 0.0);
  CHECK(tukey.ddphi(1.0) == 0.0);  // continuous second derivative at the cap
}

TEST_CASE("log-Gamma loss at zero residual and at saturation") {
  CHECK(rho(kLogGammaT, 1.7, 1.7, 0.5) == 0.0);
  CHECK(psi(kLogGammaT, 1.7, 1.7, 0.5) == 0.0);
  // sqrt(d)/a beyond one: the score saturates.
  CHECK(rho(kLogGammaT, 5.0, 0.0, 0.5) == 1.0);
  CHECK(psi(kLogGammaT, 5.0, 0.0, 0.5) == 0.0);
  CHECK(chi(kLogGammaT, 5.0, 0.0, 0.5) == 0.0);
  CHECK_THROWS_AS(rho(kLogGammaT, 1.0, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(rho(kLogGammaT, 1.0, 0.0, -1.0), std::invalid_argument);
}

TEST_CASE("identity loss hits the score saturation point") {
  for (double a : {0.5, 1.0, 2.0}) {
    CHECK(rho(kIdentityT, 1.0 + a, 1.0, a) == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK(rho(kIdentityT, 3.0, 3.0, 1.0) == 0.0);
}

TEST_CASE("classical log-Gamma second derivative is the exponential") {
  CHECK(chi(kLogGammaC, 0.4, 0.4, 1.0) == doctest::Approx(1.0).epsilon(1e-13));
  for (double u : {-1.0, -0.3, 0.2, 0.9}) {
    CHECK(chi(kLogGammaC, u, 0.0, 1.0) == doctest::Approx(std::exp(u)).epsilon(1e-12));
    CHECK(psi(kLogGammaC, u, 0.0, 1.0) ==
          doctest::Approx(1.0 - std::exp(u)).epsilon(1e-12));
  }
}

TEST_CASE("psi matches finite differences of rho") {
  Rng rng(2024);
  int checked = 0;
  while (checked < 20) {
    const double u = rng.uniform(-1.5, 1.5);
    if (std::abs(u) < 0.1) continue;
    const double a = rng.uniform(0.4, 2.0);
    const double s = rng.uniform(-2.0, 2.0);
    const double z = s + u;
    const double edge = std::sqrt(deviance_d(u)) / a;
    if (std::abs(edge - 1.0) < 0.05) continue;  // saturation boundary
    const double numeric = fd([&](double v) { return rho(kLogGammaT, z, v, a); }, s);
    const double analytic = psi(kLogGammaT, z, s, a);
    CHECK(analytic == doctest::Approx(numeric).epsilon(1e-5));
    ++checked;
  }
}

TEST_CASE("chi matches finite differences of psi") {
  Rng rng(4048);
  int checked = 0;
  while (checked < 20) {
    const double u = rng.uniform(-1.5, 1.5);
    if (std::abs(u) < 1e-3) continue;
    const double a = rng.uniform(0.4, 2.0);
    const double s = rng.uniform(-2.0, 2.0);
    const double z = s + u;
    const double edge = std::sqrt(deviance_d(u)) / a;
    if (std::abs(edge - 1.0) < 0.05) continue;
    const double numeric = fd([&](double v) { return psi(kLogGammaT, z, v, a); }, s);
    const double analytic = chi(kLogGammaT, z, s, a);
    CHECK(analytic == doctest::Approx(numeric).epsilon(1e-4));
    ++checked;
  }
}

TEST_CASE("identity and logistic derivatives match finite differences") {
  Rng rng(91);
  int checked = 0;
  while (checked < 20) {
    const double a = rng.uniform(0.4, 2.0);
    const double s = rng.uniform(-2.0, 2.0);
    const double y = s + rng.uniform(-1.5, 1.5);
    if (std::abs(std::abs((y - s) / a) - 1.0) < 0.05) continue;
    CHECK(psi(kIdentityT, y, s, a) ==
          doctest::Approx(fd([&](double v) { return rho(kIdentityT, y, v, a); }, s))
              .epsilon(1e-5));
    CHECK(chi(kIdentityT, y, s, a) ==
          doctest::Approx(fd([&](double v) { return psi(kIdentityT, y, v, a); }, s))
              .epsilon(1e-4));
    ++checked;
  }

  checked = 0;
  while (checked < 20) {
    const double s = rng.uniform(-3.0, 3.0);
    const double y = rng.uniform() < 0.5 ? 0.0 : 1.0;
    // Stay away from the kinks of the Tukey score at deviance one.
    const double sp = std::log1p(std::exp(s));
    const double sm = std::log1p(std::exp(-s));
    if (std::abs(sp - 1.0) < 0.08 || std::abs(sm - 1.0) < 0.08) continue;
    for (const ModelFamily& fam : {kLogisticT, kLogisticC}) {
      CHECK(psi(fam, y, s, 1.0) ==
            doctest::Approx(fd([&](double v) { return rho(fam, y, v, 1.0); }, s))
                .epsilon(1e-5));
      CHECK(chi(fam, y, s, 1.0) ==
            doctest::Approx(fd([&](double v) { return psi(fam, y, v, 1.0); }, s))
                .epsilon(1e-4));
    }
    ++checked;
  }
}

TEST_CASE("classical logistic loss is the binomial deviance plus a constant") {
  // G for phi(t) = t integrates phi'(-log v) = 1, so G(p) = 1 identically.
  auto g1_oracle = [&](double t) {
    return oracle::dense_simpson([](double) { return 1.0; }, 0.0, t, 2001);
  };
  const double expected = std::log(2.0) + g1_oracle(0.5) + g1_oracle(0.5);
  CHECK(rho(kLogisticC, 1.0, 0.0, 1.0) == doctest::Approx(expected).epsilon(1e-12));

  for (double s : {-1.3, -0.2, 0.8, 2.0}) {
    for (double y : {0.0, 1.0}) {
      const double p = 1.0 / (1.0 + std::exp(-s));
      const double dev = -y * std::log(p) - (1.0 - y) * std::log(1.0 - p);
      CHECK(rho(kLogisticC, y, s, 1.0) == doctest::Approx(dev + 1.0).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(rho(kLogisticT, 0.5, 0.0, 1.0), std::domain_error);
}

TEST_CASE("Tukey G1 matches the closed-form oracle") {
  const ScoreFunction tukey{ScoreKind::tukey_biweight};
  for (int i = 0; i <= 50; ++i) {
    const double t = i / 50.0;
    CHECK(logistic_correction_g1(tukey, t) ==
          doctest::Approx(oracle::tukey_g1_closed_form(t)).epsilon(1e-9));
  }
  CHECK(logistic_correction_g1(tukey, 0.2) == 0.0);  // below 1/e
}

TEST_CASE("losses are nonnegative and bounded for the Tukey score") {
  Rng rng(777);
  for (int i = 0; i < 10000; ++i) {
    const double y = rng.uniform(-4.0, 4.0);
    const double s = rng.uniform(-4.0, 4.0);
    const double a = rng.uniform(0.1, 3.0);
    const double lg = rho(kLogGammaT, y, s, a);
    CHECK(lg >= 0.0);
    CHECK(lg <= 1.0);
    const double id = rho(kIdentityT, y, s, a);
    CHECK(id >= 0.0);
    CHECK(id <= 1.0);
    const double bin = rng.uniform() < 0.5 ? 0.0 : 1.0;
    const double lo = rho(kLogisticT, bin, s, a);
    CHECK(lo >= 0.0);
    CHECK(lo <= 1.0 + 2.0 * oracle::tukey_g1_closed_form(1.0));
  }
}

TEST_CASE("leverage weight values") {
  const LeverageWeight w{1.0, 0.5, 4.685};
  CHECK(w(1.0) == 1.0);
  CHECK(w(1.0 + 4.685 * 0.5) == 0.0);
  CHECK(w(1.0 - 4.685 * 0.5) == 0.0);
  CHECK(w(1.0 + 4.685 * 0.25) == doctest::Approx(0.5625).epsilon(1e-15));

  std::vector<double> constant(50, 3.0);
  CHECK_THROWS_AS(make_leverage_weight(constant), std::invalid_argument);

  Rng rng(5);
  Eigen::MatrixXd X(200, 2);
  for (int i = 0; i < 200; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal(1.0, 2.0);
  }
  const Eigen::VectorXd w2 = leverage_weights(X);
  CHECK(w2.minCoeff() >= 0.0);
  CHECK(w2.maxCoeff() <= 1.0);
}

TEST_CASE("classical score is conditionally Fisher-consistent") {
  for (double alpha : {2.0, 3.0, 5.0}) {
    for (double a : {0.3, 0.5, 1.0}) {
      const double mean_psi = oracle::expect_log_gamma(
          [&](double u) { return psi(kLogGammaC, u, 0.0, a); }, alpha);
      CHECK(std::abs(mean_psi) < 1e-8);
    }
  }
}

TEST_CASE("population loss is minimized at zero shift") {
  for (double a : {0.3515, 0.5}) {
    const double at_zero = oracle::expect_log_gamma(
        [&](double u) { return rho(kLogGammaT, u, 0.0, a); }, 3.0);
    for (double b : {-1.0, -0.5, -0.25, 0.25, 0.5, 1.0}) {
      const double shifted = oracle::expect_log_gamma(
          [&](double u) { return rho(kLogGammaT, u, -b, a); }, 3.0);
      CHECK(shifted > at_zero);
    }
  }
}

TEST_CASE("logistic population loss has its grid minimum at the truth") {
  auto M = [&](double pi0, double pi) {
    const double s = std::log(pi / (1.0 - pi));
    return pi0 * rho(kLogisticT, 1.0, s, 1.0) + (1.0 - pi0) * rho(kLogisticT, 0.0, s, 1.0);
  };
  for (double pi0 : {0.2, 0.5, 0.8}) {
    int best = -1;
    double best_value = std::numeric_limits<double>::infinity();
    int nearest = -1;
    double nearest_gap = std::numeric_limits<double>::infinity();
    for (int g = 0; g <= 400; ++g) {
      const double pi = 0.01 + (0.99 - 0.01) * g / 400.0;
      const double value = M(pi0, pi);
      if (value < best_value) {
        best_value = value;
        best = g;
      }
      if (std::abs(pi - pi0) < nearest_gap) {
        nearest_gap = std::abs(pi - pi0);
        nearest = g;
      }
    }
    CHECK(best == nearest);
  }
}
