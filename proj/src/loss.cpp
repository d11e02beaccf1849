#include "isogplm/loss.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "isogplm/quadrature.hpp"
#include "isogplm/stats.hpp"

namespace isogplm {

double ScoreFunction::phi(double y) const {
  if (kind == ScoreKind::classical_square) return y * y;
  const double y2 = y * y;
  if (y2 >= 1.0) return 1.0;
  return y2 * (3.0 + y2 * (-3.0 + y2));
}

double ScoreFunction::dphi(double y) const {
  if (kind == ScoreKind::classical_square) return 2.0 * y;
  const double y2 = y * y;
  if (y2 >= 1.0) return 0.0;
  const double o = 1.0 - y2;
  return 6.0 * y * o * o;
}

double ScoreFunction::ddphi(double y) const {
  if (kind == ScoreKind::classical_square) return 2.0;
  const double y2 = y * y;
  if (y2 >= 1.0) return 0.0;
  return 6.0 + y2 * (-36.0 + 30.0 * y2);
}

double ScoreFunction::dphi_over_y(double y) const {
  if (kind == ScoreKind::classical_square) return 2.0;
  const double y2 = y * y;
  if (y2 >= 1.0) return 0.0;
  const double o = 1.0 - y2;
  return 6.0 * o * o;
}

double ScoreFunction::sup() const {
  return kind == ScoreKind::tukey_biweight ? 1.0
                                           : std::numeric_limits<double>::infinity();
}

double deviance_d(double u) {
  if (std::abs(u) < 1e-4) {
    return u * u * (0.5 + u * (1.0 / 6.0 + u * (1.0 / 24.0)));
  }
  return std::expm1(u) - u;
}

namespace {

// (1 - e^u)^2 / d(u); removable singularity at u = 0 where the value is 2.
double one_minus_exp_sq_over_d(double u) {
  if (std::abs(u) < 1e-8) return 2.0 + 4.0 * u / 3.0;
  const double s = std::expm1(u);
  return s * s / deviance_d(u);
}

double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

// log(1 + e^s) = -log H(-s), stable for large |s|.
double softplus(double s) {
  if (s > 35.0) return s;
  if (s < -35.0) return std::exp(s);
  return std::log1p(std::exp(s));
}

struct LogisticScore {
  bool classical;  // phi(t) = t, the maximum-likelihood choice
  const ScoreFunction* score;

  double phi(double t) const { return classical ? t : score->phi(t); }
  double dphi(double t) const { return classical ? 1.0 : score->dphi(t); }
  double ddphi(double t) const { return classical ? 0.0 : score->ddphi(t); }
};

LogisticScore logistic_score(const ModelFamily& family) {
  return {family.score.kind == ScoreKind::classical_square, &family.score};
}

void check_logistic_response(double y) {
  if (y != 0.0 && y != 1.0)
    throw std::domain_error("logistic loss: response must be 0 or 1");
}

void check_tuning(double a) {
  if (!(a > 0.0)) throw std::invalid_argument("loss: tuning constant must be positive");
}

// Cached-node evaluation of G1 for the Tukey score. The integrand
// phi'(-log v) is supported on v in [1/e, 1]; partial integrals up to fixed
// nodes are accumulated once and reused, with only the remainder to t
// integrated per call.
class TukeyG1Cache {
 public:
  double operator()(const ScoreFunction& score, double t) {
    constexpr double kLower = 0.36787944117144233;  // 1/e
    if (t <= kLower) return 0.0;
    t = std::min(t, 1.0);
    std::call_once(init_, [&] { build(score); });
    const double pos = (t - kLower) / (1.0 - kLower) * (kNodes - 1);
    const auto j = std::min(static_cast<std::size_t>(pos), kNodes - 1);
    const double node = kLower + (1.0 - kLower) * j / (kNodes - 1);
    auto f = [&](double v) { return score.dphi(-std::log(v)); };
    return prefix_[j] + adaptive_simpson(f, node, t, 1e-11, 40, 2);
  }

 private:
  static constexpr std::size_t kNodes = 1025;

  void build(const ScoreFunction& score) {
    constexpr double kLower = 0.36787944117144233;
    prefix_.resize(kNodes);
    prefix_[0] = 0.0;
    auto f = [&](double v) { return score.dphi(-std::log(v)); };
    for (std::size_t j = 1; j < kNodes; ++j) {
      const double a = kLower + (1.0 - kLower) * (j - 1) / (kNodes - 1);
      const double b = kLower + (1.0 - kLower) * j / (kNodes - 1);
      prefix_[j] = prefix_[j - 1] + adaptive_simpson(f, a, b, 5e-14, 40, 1);
    }
  }

  std::once_flag init_;
  std::vector<double> prefix_;
};

TukeyG1Cache g1_cache;

}  // namespace

double logistic_correction_g1(const ScoreFunction& score, double t) {
  t = std::clamp(t, 0.0, 1.0);
  if (score.kind == ScoreKind::classical_square) return t;  // phi'(t) = 1
  return g1_cache(score, t);
}

double logistic_correction(const ScoreFunction& score, double t) {
  return logistic_correction_g1(score, t) + logistic_correction_g1(score, 1.0 - t);
}

double rho(const ModelFamily& family, double y, double s, double a) {
  switch (family.kind) {
    case FamilyKind::log_gamma: {
      check_tuning(a);
      return family.score.phi(std::sqrt(deviance_d(y - s)) / a);
    }
    case FamilyKind::identity: {
      check_tuning(a);
      return family.score.phi((y - s) / a);
    }
    case FamilyKind::logistic: {
      check_logistic_response(y);
      const LogisticScore sc = logistic_score(family);
      const double p = sigmoid(s);
      const double loss = y * sc.phi(softplus(-s)) + (1.0 - y) * sc.phi(softplus(s));
      if (sc.classical) return loss + 1.0;  // G is the constant 1
      return loss + logistic_correction(family.score, p);
    }
  }
  throw std::logic_error("rho: unknown family");
}

double psi(const ModelFamily& family, double y, double s, double a) {
  switch (family.kind) {
    case FamilyKind::log_gamma: {
      check_tuning(a);
      const double u = y - s;
      const double r = std::sqrt(deviance_d(u));
      const double g = family.score.dphi_over_y(r / a);
      if (g == 0.0) return 0.0;  // saturated score
      return 0.5 / (a * a) * g * (-std::expm1(u));
    }
    case FamilyKind::identity: {
      check_tuning(a);
      return -family.score.dphi((y - s) / a) / a;
    }
    case FamilyKind::logistic: {
      check_logistic_response(y);
      const LogisticScore sc = logistic_score(family);
      const double p = sigmoid(s);
      const double A = sc.dphi(softplus(-s));   // phi'(-log p)
      const double B = sc.dphi(softplus(s));    // phi'(-log(1-p))
      return -y * A * (1.0 - p) + (1.0 - y) * B * p + (A - B) * p * (1.0 - p);
    }
  }
  throw std::logic_error("psi: unknown family");
}

double chi(const ModelFamily& family, double y, double s, double a) {
  switch (family.kind) {
    case FamilyKind::log_gamma: {
      check_tuning(a);
      const double u = y - s;
      const double r = std::sqrt(deviance_d(u));
      const double g = family.score.dphi_over_y(r / a);
      const double dd = family.score.ddphi(r / a);
      if (g == 0.0 && dd == 0.0) return 0.0;
      const double qsq = one_minus_exp_sq_over_d(u);
      return 0.5 / (a * a) * (0.5 * qsq * (dd - g) + g * std::exp(u));
    }
    case FamilyKind::identity: {
      check_tuning(a);
      return family.score.ddphi((y - s) / a) / (a * a);
    }
    case FamilyKind::logistic: {
      check_logistic_response(y);
      const LogisticScore sc = logistic_score(family);
      const double p = sigmoid(s);
      const double q = 1.0 - p;
      const double A = sc.dphi(softplus(-s));
      const double B = sc.dphi(softplus(s));
      const double ddA = sc.ddphi(softplus(-s));   // phi''(-log p)
      const double ddB = sc.ddphi(softplus(s));    // phi''(-log(1-p))
      const double pq = p * q;
      return y * (ddA * q * q + A * pq) + (1.0 - y) * (ddB * p * p + B * pq) -
             (ddA * q + ddB * p) * pq + (A - B) * (1.0 - 2.0 * p) * pq;
    }
  }
  throw std::logic_error("chi: unknown family");
}

double LeverageWeight::operator()(double x) const {
  const double z = (x - center) / (c_w * spread);
  if (std::abs(z) >= 1.0) return 0.0;
  const double o = 1.0 - z * z;
  return o * o;
}

LeverageWeight make_leverage_weight(std::span<const double> carriers, double c_w) {
  if (!(c_w > 0.0)) throw std::invalid_argument("leverage weight: c_w must be positive");
  LeverageWeight w;
  w.center = median(carriers);
  w.spread = mad_normalized(carriers);
  w.c_w = c_w;
  if (!(w.spread > 0.0))
    throw std::invalid_argument("leverage weight: degenerate carrier distribution (zero MAD)");
  return w;
}

Eigen::VectorXd leverage_weights(const Eigen::MatrixXd& X, double c_w) {
  const Eigen::Index n = X.rows();
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    std::vector<double> col(X.col(j).data(), X.col(j).data() + n);
    const LeverageWeight wj = make_leverage_weight(col, c_w);
    for (Eigen::Index i = 0; i < n; ++i) w[i] *= wj(X(i, j));
  }
  return w;
}

}  // namespace isogplm
