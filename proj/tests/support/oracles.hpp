// Independent oracles used by the tests: dense-grid quadrature, the direct
// Cox-de Boor recursion, finite differences, and closed forms. These stay
// deliberately separate from the library implementations they check.
#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

// Composite Simpson on a fixed dense grid (independent of the library's
// adaptive routine). points must be odd.
inline double dense_simpson(const std::function<double(double)>& f, double a, double b,
                            int points = 20001) {
  if (points % 2 == 0) ++points;
  const double h = (b - a) / (points - 1);
  double acc = f(a) + f(b);
  for (int i = 1; i + 1 < points; ++i) acc += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// Density of log(Gamma(alpha, mean 1)), written out directly.
inline double log_gamma_density(double u, double alpha) {
  return std::exp(alpha * std::log(alpha) - std::lgamma(alpha) +
                  alpha * (u - std::exp(u)));
}

// E[f(u)] by dense Simpson over a generous fixed window.
inline double expect_log_gamma(const std::function<double(double)>& f, double alpha,
                               int points = 40001) {
  const double lo = -40.0 / alpha - 20.0;
  const double hi = 20.0;
  return dense_simpson([&](double u) { return f(u) * log_gamma_density(u, alpha); }, lo,
                       hi, points);
}

// Direct Cox-de Boor recursion with the 0/0 = 0 convention; the last
// interval is closed. Order-l basis function j (0-based) on knots T.
inline double cox_de_boor(const std::vector<double>& T, int j, int order, double t) {
  if (order == 1) {
    const bool last = static_cast<std::size_t>(j + 2) == T.size() ||
                      T[j + 1] == T.back();
    if (last ? (t >= T[j] && t <= T[j + 1]) : (t >= T[j] && t < T[j + 1]))
      return T[j] < T[j + 1] ? 1.0 : 0.0;
    return 0.0;
  }
  double left = 0.0, right = 0.0;
  const double dl = T[j + order - 1] - T[j];
  if (dl > 0.0) left = (t - T[j]) / dl * cox_de_boor(T, j, order - 1, t);
  const double dr = T[j + order] - T[j + 1];
  if (dr > 0.0) right = (T[j + order] - t) / dr * cox_de_boor(T, j + 1, order - 1, t);
  return left + right;
}

// Central finite difference of a scalar function of a vector.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd hi = x, lo = x;
    const double step = h * std::max(1.0, std::abs(x[i]));
    hi[i] += step;
    lo[i] -= step;
    g[i] = (f(hi) - f(lo)) / (2.0 * step);
  }
  return g;
}

// Closed form of G1 for the Tukey biweight: integral over [a,1] of
// (6u - 12u^3 + 6u^5) e^{-u} du with a = max(0, -log t).
inline double tukey_g1_closed_form(double t) {
  if (t <= std::exp(-1.0)) return 0.0;
  const double a = std::max(0.0, -std::log(std::min(t, 1.0)));
  auto Q = [](double u) {
    return 654.0 + u * (654.0 + u * (324.0 + u * (108.0 + u * (30.0 + 6.0 * u))));
  };
  return std::exp(-a) * Q(a) - std::exp(-1.0) * Q(1.0);
}

// Sort-based empirical quantile (linear interpolation, the same definition
// the library documents, coded independently).
inline double sorted_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (v.size() - 1) * p;
  const auto i = static_cast<std::size_t>(h);
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (h - i) * (v[i + 1] - v[i]);
}

}  // namespace oracle
