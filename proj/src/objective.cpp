#include "isogplm/objective.hpp"

#include <sstream>
#include <stdexcept>

namespace isogplm {

Objective::Objective(Eigen::VectorXd response, Eigen::MatrixXd X, Eigen::MatrixXd design,
                     ModelFamily family, double tuning, Eigen::VectorXd weights)
    : response_(std::move(response)),
      X_(std::move(X)),
      design_(std::move(design)),
      family_(family),
      tuning_(tuning),
      weights_(std::move(weights)) {
  const Eigen::Index n = response_.size();
  if (X_.rows() != n || design_.rows() != n || weights_.size() != n)
    throw std::invalid_argument("Objective: row counts do not match");
  if ((weights_.array() < 0.0).any())
    throw std::invalid_argument("Objective: negative weight");
  augmented_.resize(n, X_.cols() + design_.cols());
  if (X_.cols() > 0) augmented_.leftCols(X_.cols()) = X_;
  augmented_.rightCols(design_.cols()) = design_;
}

void Objective::check_dims(const Eigen::VectorXd& beta, const Eigen::VectorXd& lambda) const {
  if (beta.size() != p() || lambda.size() != k()) {
    std::ostringstream msg;
    msg << "Objective: parameter dimensions (" << beta.size() << ", " << lambda.size()
        << ") do not match (p, k) = (" << p() << ", " << k() << ")";
    throw std::invalid_argument(msg.str());
  }
}

Eigen::VectorXd Objective::predictor(const Eigen::VectorXd& beta,
                                     const Eigen::VectorXd& lambda) const {
  check_dims(beta, lambda);
  Eigen::VectorXd s = design_ * lambda;
  if (p() > 0) s += X_ * beta;
  return s;
}

double Objective::value(const Eigen::VectorXd& beta, const Eigen::VectorXd& lambda) const {
  const Eigen::VectorXd s = predictor(beta, lambda);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n(); ++i) {
    if (weights_[i] == 0.0) continue;
    acc += rho(family_, response_[i], s[i], tuning_) * weights_[i];
  }
  return acc / static_cast<double>(n());
}

Eigen::VectorXd Objective::gradient(const Eigen::VectorXd& beta,
                                    const Eigen::VectorXd& lambda) const {
  const Eigen::VectorXd s = predictor(beta, lambda);
  Eigen::VectorXd psi_w(n());
  for (Eigen::Index i = 0; i < n(); ++i)
    psi_w[i] = weights_[i] == 0.0 ? 0.0 : psi(family_, response_[i], s[i], tuning_) * weights_[i];
  return augmented_.transpose() * psi_w / static_cast<double>(n());
}

Eigen::MatrixXd Objective::hessian(const Eigen::VectorXd& beta,
                                   const Eigen::VectorXd& lambda) const {
  const Eigen::VectorXd s = predictor(beta, lambda);
  Eigen::VectorXd chi_w(n());
  for (Eigen::Index i = 0; i < n(); ++i)
    chi_w[i] = weights_[i] == 0.0 ? 0.0 : chi(family_, response_[i], s[i], tuning_) * weights_[i];
  Eigen::MatrixXd H = augmented_.transpose() * chi_w.asDiagonal() * augmented_ /
                      static_cast<double>(n());
  // Enforce exact symmetry against rounding in the triple product.
  H = 0.5 * (H + H.transpose()).eval();
  return H;
}

}  // namespace isogplm
