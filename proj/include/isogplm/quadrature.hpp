// Adaptive Simpson quadrature and expectations under the log-Gamma error
// density g(u, alpha) = alpha^alpha / Gamma(alpha) * exp(alpha * (u - e^u)).
#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

namespace isogplm {

namespace detail {

template <class F>
double simpson_rec(F& f, double a, double fa, double b, double fb, double m,
                   double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Integral of f over [a, b] to absolute tolerance abs_tol. The interval is
// pre-split into panels so that symmetric features do not fool the error
// estimate.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double abs_tol,
                        int max_depth = 40, int initial_panels = 8) {
  if (!(abs_tol > 0.0)) throw std::invalid_argument("quadrature: abs_tol must be positive");
  if (a == b) return 0.0;
  double total = 0.0;
  const double h = (b - a) / initial_panels;
  const double panel_tol = abs_tol / initial_panels;
  for (int i = 0; i < initial_panels; ++i) {
    const double lo = a + i * h;
    const double hi = (i + 1 == initial_panels) ? b : a + (i + 1) * h;
    const double mid = 0.5 * (lo + hi);
    const double flo = f(lo), fhi = f(hi), fmid = f(mid);
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    total += detail::simpson_rec(f, lo, flo, hi, fhi, mid, fmid, whole,
                                 panel_tol, max_depth);
  }
  return total;
}

inline double log_gamma_error_log_density(double u, double alpha) {
  return alpha * std::log(alpha) - std::lgamma(alpha) + alpha * (u - std::exp(u));
}

// Density of u = log(y) with y ~ Gamma(shape alpha, mean 1).
inline double log_gamma_error_density(double u, double alpha) {
  return std::exp(log_gamma_error_log_density(u, alpha));
}

// Interval outside of which the density is below floor_density. Found by
// expanding outward from the mode at u = 0; the neglected tail mass is
// bounded by floor_density times the discarded length.
inline std::pair<double, double> log_gamma_error_support(double alpha,
                                                         double floor_density = 1e-14) {
  if (!(alpha > 0.0)) throw std::invalid_argument("log_gamma_error_support: alpha must be positive");
  const double log_floor = std::log(floor_density);
  double lo = -1.0;
  while (log_gamma_error_log_density(lo, alpha) > log_floor) {
    lo *= 1.5;
    if (lo < -1e7) throw std::runtime_error("log_gamma_error_support: lower bound search failed");
  }
  double hi = 1.0;
  while (log_gamma_error_log_density(hi, alpha) > log_floor) {
    hi += 1.0;
    if (hi > 1e4) throw std::runtime_error("log_gamma_error_support: upper bound search failed");
  }
  return {lo, hi};
}

// E[f(u)] with u ~ log(Gamma(alpha, mean 1)).
template <class F>
double expect_log_gamma(F&& f, double alpha, double abs_tol = 1e-9) {
  const auto [lo, hi] = log_gamma_error_support(alpha);
  auto integrand = [&](double u) { return f(u) * log_gamma_error_density(u, alpha); };
  // Wide supports (small alpha) need more initial panels to resolve the mode.
  const int panels = (hi - lo > 100.0) ? 64 : 16;
  return adaptive_simpson(integrand, lo, hi, abs_tol, 40, panels);
}

}  // namespace isogplm
