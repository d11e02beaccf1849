// Model families as bundles of deviance, loss rho, derivatives Psi and chi,
// and the leverage weight used to control outlying carriers.
#pragma once

#include <Eigen/Core>
#include <span>

namespace isogplm {

enum class ScoreKind { tukey_biweight, classical_square };

// Even, nondecreasing score phi with phi(0) = 0. The Tukey biweight is
// phi(y) = min(3y^2 - 3y^4 + y^6, 1); the classical choice is phi(y) = y^2.
struct ScoreFunction {
  ScoreKind kind = ScoreKind::tukey_biweight;

  double phi(double y) const;
  double dphi(double y) const;
  double ddphi(double y) const;
  // phi'(y)/y, which extends continuously through y = 0.
  double dphi_over_y(double y) const;
  double sup() const;  // sup phi (1 for Tukey, +inf for classical)
};

// Deviance unit d(u) = e^u - u - 1 >= 0. Uses the series
// u^2/2 + u^3/6 + u^4/24 for |u| < 1e-4 to avoid cancellation; overflow for
// very large u saturates to +infinity.
double deviance_d(double u);

enum class FamilyKind { log_gamma, identity, logistic };
enum class NuisanceKind { shape_alpha, scale_sigma, none };

struct ModelFamily {
  FamilyKind kind = FamilyKind::log_gamma;
  ScoreFunction score;

  static ModelFamily log_gamma(ScoreKind s) { return {FamilyKind::log_gamma, {s}}; }
  static ModelFamily identity(ScoreKind s) { return {FamilyKind::identity, {s}}; }
  static ModelFamily logistic(ScoreKind s) { return {FamilyKind::logistic, {s}}; }

  NuisanceKind nuisance() const {
    switch (kind) {
      case FamilyKind::log_gamma: return NuisanceKind::shape_alpha;
      case FamilyKind::identity: return NuisanceKind::scale_sigma;
      default: return NuisanceKind::none;
    }
  }
};

// Loss, first and second derivative in the linear predictor s.
//
// log_gamma: rho = phi(sqrt(d(y - s)) / a) with y already on the log scale.
// identity:  rho = phi((y - s) / a).
// logistic:  rho = y phi(-log H(s)) + (1-y) phi(-log(1-H(s))) + G(H(s)),
//            H(s) = 1/(1+e^(-s)); a is ignored; classical means phi(t) = t
//            (maximum likelihood, G constant).
double rho(const ModelFamily& family, double y, double s, double a);
double psi(const ModelFamily& family, double y, double s, double a);
double chi(const ModelFamily& family, double y, double s, double a);

// Correction term for the logistic loss, G(t) = G1(t) + G1(1-t) with
// G1(t) = int_0^t phi'(-log v) dv, evaluated by adaptive quadrature to
// 1e-10 absolute tolerance (with cached nodes for the Tukey score).
double logistic_correction_g1(const ScoreFunction& score, double t);
double logistic_correction(const ScoreFunction& score, double t);

// Tukey biweight weight in x, centered at the carrier median and scaled by
// c_w times the (normalized) MAD. Zero outside the window, one at the center.
struct LeverageWeight {
  double center = 0.0;
  double spread = 1.0;
  double c_w = 4.685;

  double operator()(double x) const;
};

LeverageWeight make_leverage_weight(std::span<const double> carriers, double c_w = 4.685);

// Per-observation weights for an n x p carrier matrix: the univariate weight
// per standardized coordinate, multiplied across coordinates.
Eigen::VectorXd leverage_weights(const Eigen::MatrixXd& X, double c_w = 4.685);

}  // namespace isogplm
