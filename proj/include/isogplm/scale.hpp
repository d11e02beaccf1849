// M-scale estimation, the population scale map sigma*(alpha) and its
// inverse used to estimate the Gamma shape, and efficiency-calibrated
// tuning constants C_e(alpha).
#pragma once

#include <array>
#include <iosfwd>
#include <mutex>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace isogplm {

// Thrown when more than n*(1-b) of the values are zero, so the M-scale
// equation has no positive solution; the implied scale is zero.
struct ExactFitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ScaleScoreKind {
  tukey_biweight,  // the bounded rho-function used throughout
  indicator        // chi(t) = 1(|t| > 1); with c = 1, b = 1/2 this is median|v|
};

struct MScaleConfig {
  ScaleScoreKind score = ScaleScoreKind::tukey_biweight;
  double b = 0.5;        // target in (0, sup phi)
  double c = 1.54764;    // tuning; the default gives SD-consistency at the normal
  double tol = 1e-10;
  int max_iter = 200;
};

// Scale sigma solving (1/n) sum phi(v_i / (c sigma)) = b by bisection.
// Values must be nonnegative with at least ceil(n b) of them nonzero.
double m_scale(std::span<const double> values, const MScaleConfig& cfg = {});

struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Population quantities under u ~ log(Gamma(alpha, mean 1)) for the Tukey
// log-Gamma loss:
//   sigma_star(alpha): solution of E[phi(sqrt(d(u))/sigma)] = b,
//                      strictly decreasing in alpha;
//   alpha_from_sigma:  its inverse;
//   tuning_for_efficiency: c with A^2(c)/(alpha B(c)) = e, where
//                      A = E[chi_c(u,0)] and B = E[Psi_c(u,0)^2];
//   adaptive_tuning:   max(sigma_hat, C_e(alpha_from_sigma(sigma_hat))).
class ShapeCalibration {
 public:
  struct Options {
    double b = 0.5;
    double quad_tol = 1e-9;
    double alpha_min = 0.01;
    double alpha_max = 1000.0;
  };

  explicit ShapeCalibration(Options opts = {});

  double sigma_star(double alpha) const;
  double alpha_from_sigma(double sigma_hat) const;
  double tuning_for_efficiency(double alpha, double e) const;
  double adaptive_tuning(double sigma_hat, double e) const;

  // Efficiency of the tuning constant c at shape alpha relative to the
  // classical deviance estimator (whose variance factor is 1/alpha).
  double efficiency(double alpha, double c) const;

  // Reproducibility table with columns alpha,sigma_star,c_e_090,c_e_095.
  void export_csv(std::ostream& out, std::span<const double> alphas) const;
  static std::vector<std::array<double, 4>> import_csv(std::istream& in);

  const Options& options() const { return opts_; }

 private:
  double sigma_star_exact(double alpha) const;
  void ensure_table() const;

  Options opts_;
  mutable std::once_flag table_once_;
  // Fixed grid alpha -> sigma*(alpha); values strictly decreasing in alpha.
  mutable std::vector<std::pair<double, double>> table_;
};

}  // namespace isogplm
