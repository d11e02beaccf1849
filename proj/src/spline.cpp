#include "isogplm/spline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "isogplm/stats.hpp"

namespace isogplm {

double KnotSet::spacing_ratio() const {
  if (interior.empty()) return 1.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i <= interior.size(); ++i) {
    const double next = (i < interior.size()) ? interior[i] : 1.0;
    const double gap = next - prev;
    lo = std::min(lo, gap);
    hi = std::max(hi, gap);
    prev = next;
  }
  return hi / lo;
}

KnotSet build_knots(std::span<const double> t_values, int interior_count,
                    int order, KnotPlacement placement) {
  if (order < 2) throw std::invalid_argument("build_knots: order must be at least 2");
  if (interior_count < 0) throw std::invalid_argument("build_knots: negative interior knot count");

  KnotSet ks;
  ks.order = order;
  ks.interior.reserve(interior_count);

  if (placement == KnotPlacement::uniform) {
    for (int i = 1; i <= interior_count; ++i)
      ks.interior.push_back(static_cast<double>(i) / (interior_count + 1));
  } else {
    if (interior_count > 0 && t_values.empty())
      throw std::invalid_argument("build_knots: quantile placement needs data");
    for (int i = 1; i <= interior_count; ++i) {
      const double p = static_cast<double>(i) / (interior_count + 1);
      const double q = quantile(t_values, p);
      if (!(q > 0.0 && q < 1.0)) {
        std::ostringstream msg;
        msg << "build_knots: quantile knot at percentile " << 100.0 * p
            << "% falls on the boundary (" << q << ")";
        throw std::invalid_argument(msg.str());
      }
      if (!ks.interior.empty() && q <= ks.interior.back()) {
        std::ostringstream msg;
        msg << "build_knots: quantile knots at percentiles "
            << 100.0 * (i - 1.0) / (interior_count + 1) << "% and " << 100.0 * p
            << "% coincide at " << q;
        throw std::invalid_argument(msg.str());
      }
      ks.interior.push_back(q);
    }
  }

  ks.full.reserve(ks.interior.size() + 2 * order);
  ks.full.insert(ks.full.end(), order, 0.0);
  ks.full.insert(ks.full.end(), ks.interior.begin(), ks.interior.end());
  ks.full.insert(ks.full.end(), order, 1.0);
  return ks;
}

SplineBasis::SplineBasis(KnotSet knots)
    : knots_(std::move(knots)),
      size_(knots_.interior_count() + knots_.order) {
  if (knots_.order < 2) throw std::invalid_argument("SplineBasis: order must be at least 2");
  if (knots_.full.size() != knots_.interior.size() + 2 * static_cast<std::size_t>(knots_.order))
    throw std::invalid_argument("SplineBasis: inconsistent knot sequence");
}

Eigen::VectorXd SplineBasis::eval(double t) const {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::domain_error("SplineBasis::eval: t outside [0,1]");

  const auto& knot = knots_.full;
  const int order = knots_.order;
  const int m = knots_.interior_count();

  // Span index j with knot[j] <= t < knot[j+1]; the last nonempty interval
  // is closed so t = 1 maps to j = m + order - 1.
  int j = static_cast<int>(std::upper_bound(knot.begin(), knot.end(), t) - knot.begin()) - 1;
  j = std::min(j, m + order - 1);

  // Triangular recursion for the `order` nonzero functions on the span,
  // with the 0/0 = 0 convention at repeated knots.
  Eigen::VectorXd nz = Eigen::VectorXd::Zero(order);
  std::vector<double> left(order), right(order);
  nz[0] = 1.0;
  for (int d = 1; d < order; ++d) {
    left[d] = t - knot[j + 1 - d];
    right[d] = knot[j + d] - t;
    double saved = 0.0;
    for (int r = 0; r < d; ++r) {
      const double denom = right[r + 1] + left[d - r];
      const double temp = (denom != 0.0) ? nz[r] / denom : 0.0;
      nz[r] = saved + right[r + 1] * temp;
      saved = left[d - r] * temp;
    }
    nz[d] = saved;
  }

  Eigen::VectorXd out = Eigen::VectorXd::Zero(size_);
  const int first = j - (order - 1);
  for (int i = 0; i < order; ++i) out[first + i] = nz[i];
  return out;
}

Eigen::MatrixXd SplineBasis::design(const Eigen::VectorXd& t) const {
  Eigen::MatrixXd out(t.size(), size_);
  for (Eigen::Index i = 0; i < t.size(); ++i) out.row(i) = eval(t[i]).transpose();
  return out;
}

bool is_feasible(const Eigen::VectorXd& coefficients) {
  for (Eigen::Index i = 0; i + 1 < coefficients.size(); ++i)
    if (coefficients[i] > coefficients[i + 1]) return false;
  return true;
}

}  // namespace isogplm
