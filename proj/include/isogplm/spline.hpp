// B-spline bases on [0,1] with repeated boundary knots, and the monotone
// subclass obtained by ordering the coefficients.
#pragma once

#include <Eigen/Core>
#include <memory>
#include <span>
#include <vector>

namespace isogplm {

enum class KnotPlacement { uniform, quantile };

// Knot sequence for splines of order `order` (degree order-1): `order`
// copies of 0, the interior knots, `order` copies of 1.
struct KnotSet {
  std::vector<double> interior;  // strictly increasing, inside (0,1)
  int order = 4;
  std::vector<double> full;      // interior.size() + 2*order entries

  int interior_count() const { return static_cast<int>(interior.size()); }

  // Ratio of the largest to the smallest spacing of the partition
  // {0, interior..., 1}; diagnostic for knot quality.
  double spacing_ratio() const;
};

// Interior knots either equispaced at i/(m+1) or at empirical quantiles of
// t_values with uniform percentile ranks. Coincident quantile knots are an
// error (merging them silently would change the basis dimension).
KnotSet build_knots(std::span<const double> t_values, int interior_count,
                    int order, KnotPlacement placement);

class SplineBasis {
 public:
  explicit SplineBasis(KnotSet knots);

  // Number of basis functions: interior knots + order.
  int size() const { return size_; }
  int order() const { return knots_.order; }
  const KnotSet& knots() const { return knots_; }

  // Vector (B_1(t), ..., B_k(t)). Entries are nonnegative, sum to one, and
  // at most `order` of them are nonzero. t must lie in [0,1]; the last
  // interval is treated as closed so t = 1 is valid.
  Eigen::VectorXd eval(double t) const;

  // Rows B(t_i) stacked into an n x k matrix.
  Eigen::MatrixXd design(const Eigen::VectorXd& t) const;

 private:
  KnotSet knots_;
  int size_;
};

// Spline with nondecreasing coefficients; the resulting function is
// nondecreasing on [0,1].
struct MonotoneSpline {
  std::shared_ptr<const SplineBasis> basis;
  Eigen::VectorXd coefficients;

  double operator()(double t) const { return basis->eval(t).dot(coefficients); }
};

// Membership in the ordered-coefficient class L_k.
bool is_feasible(const Eigen::VectorXd& coefficients);

}  // namespace isogplm
