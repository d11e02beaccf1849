// Small order-statistics helpers shared by the knot builder and the
// leverage weights.
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace isogplm {

// Empirical quantile with linear interpolation between order statistics
// (the common "type 7" definition), p in [0, 1].
inline double quantile(std::span<const double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p outside [0,1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = (sorted.size() - 1) * p;
  const auto i = static_cast<std::size_t>(std::floor(h));
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + (h - i) * (sorted[i + 1] - sorted[i]);
}

inline double median(std::span<const double> values) { return quantile(values, 0.5); }

// Median absolute deviation scaled to be consistent for the standard
// deviation at the normal (factor 1.4826).
inline double mad_normalized(std::span<const double> values) {
  const double med = median(values);
  std::vector<double> dev(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) dev[i] = std::abs(values[i] - med);
  return 1.4826 * median(dev);
}

}  // namespace isogplm
