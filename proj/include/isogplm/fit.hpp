// High-level estimation pipelines: the four-step robust log-Gamma fit,
// classical deviance fit, identity-link and logistic fits, BIC basis-size
// selection and jackknife standard errors.
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "isogplm/dataset.hpp"
#include "isogplm/scale.hpp"
#include "isogplm/solver.hpp"
#include "isogplm/spline.hpp"

namespace isogplm {

enum class IdentityScaleKind {
  m_scale_tukey,  // Tukey M-scale with c = 1.54764, b = 1/2
  median_abs      // median |r_i| (indicator score)
};

struct FitConfig {
  int spline_order = 4;  // "cubic": 4 repeated boundary knots, degree 3
  KnotPlacement placement = KnotPlacement::uniform;
  std::optional<int> basis_size;  // fixed k; empty selects k by BIC
  double efficiency = 0.9;
  double c_w = 4.685;
  bool use_leverage_weights = true;  // robust fits only; classical uses w = 1
  bool pre_logged = false;           // responses already on the log scale
  bool rescale_t = false;            // min-max rescale t into [0,1]

  // S-step controls: random subsamples of size p + k define exact-fit
  // candidates; the best few are refined on the sigma profile.
  int s_subsamples = 50;
  int s_refine = 2;
  int s_nm_max_iter = 200;
  std::uint64_t seed = 20240501;

  // Final identity-link tuning is multiplier * kappa_hat.
  IdentityScaleKind identity_scale = IdentityScaleKind::m_scale_tukey;
  double identity_tuning_multiplier = 4.685;

  SolverOptions solver;
  // Shared calibration (sigma* table); created on demand when absent.
  std::shared_ptr<const ShapeCalibration> calibration;
};

struct TRescale {
  double t_min = 0.0;
  double t_max = 1.0;
};

struct FitResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd lambda;  // nondecreasing
  MonotoneSpline eta;
  std::optional<double> alpha_hat;  // log-Gamma robust shape estimate
  std::optional<double> sigma_hat;  // S-scale (log-Gamma) or kappa (identity)
  double tuning = 1.0;              // c_n (or a) used in the final loss
  double bic = 0.0;
  int k = 0;
  SolverReport solver;
  std::optional<Eigen::VectorXd> jackknife_se;
  std::optional<TRescale> t_rescale;
  bool flagged = false;  // non-convergence or diverging coefficients

  double eta_at(double t) const { return eta(t); }
};

// Four-step robust fit for the log-Gamma model: S-estimate of the scale of
// the root deviances, adaptive tuning c_n = max(sigma_n, C_e(alpha_n)),
// unconstrained MM step, then the ordered-coefficient constraints.
FitResult fit_robust_loggamma(const Dataset& data, const FitConfig& cfg);

// Classical deviance fit (phi(t) = t^2 scaling absorbed, w = 1): Newton from
// zero, then the constraint step.
FitResult fit_classical(const Dataset& data, const FitConfig& cfg);

// Identity link: preliminary Tukey fit with unit scale, residual M-scale
// kappa, MM fit with tuning multiplier * kappa, constraint step.
FitResult fit_identity(const Dataset& data, const FitConfig& cfg,
                       ScoreKind score = ScoreKind::tukey_biweight);

// Logistic responses in {0,1}; no nuisance step. The carrier matrix must
// not contain an intercept column (identifiability).
FitResult fit_logistic(const Dataset& data, const FitConfig& cfg,
                       ScoreKind score = ScoreKind::tukey_biweight);

enum class FitKind { robust_loggamma, classical_loggamma, identity, logistic };

FitResult fit(const Dataset& data, const FitConfig& cfg, FitKind kind,
              ScoreKind score = ScoreKind::tukey_biweight);

struct BicSelection {
  int k = 0;
  FitResult fit;
  std::vector<std::pair<int, double>> curve;      // (k, BIC(k)) for successful fits
  std::vector<std::pair<int, std::string>> failures;
};

// Fits every k in [ceil(max(n^{1/5}/2, 4)), floor(8 + 2 n^{1/5})] (or the
// given range), each with its own tuning estimate, and returns the first
// local minimum of BIC(k).
BicSelection bic_select(const Dataset& data, const FitConfig& cfg, FitKind kind,
                        ScoreKind score = ScoreKind::tukey_biweight,
                        std::optional<std::pair<int, int>> k_range = {});

std::pair<int, int> default_bic_range(Eigen::Index n);

// Smallest k with BIC(k) <= both neighbours; boundaries count when the curve
// rises away from them.
int select_first_local_min(std::span<const std::pair<int, double>> curve);

// Leave-one-out standard deviations for beta_hat, warm-started at the
// full-data solution (with k frozen at the full-data choice).
Eigen::VectorXd jackknife_se(const Dataset& data, const FitConfig& cfg, FitKind kind);

// Average squared error of eta_hat against eta0 at the design points.
double ise(const MonotoneSpline& eta_hat, const std::function<double(double)>& eta0,
           const Eigen::VectorXd& t_values);

}  // namespace isogplm
