// The weighted sample objective L_n(beta, lambda) with its gradient and
// Hessian, assembled from a model family, leverage weights and a cached
// spline design.
#pragma once

#include <Eigen/Core>

#include "isogplm/loss.hpp"

namespace isogplm {

class Objective {
 public:
  // response: y (or log y for the log-Gamma family); design: rows B(t_i).
  Objective(Eigen::VectorXd response, Eigen::MatrixXd X, Eigen::MatrixXd design,
            ModelFamily family, double tuning, Eigen::VectorXd weights);

  // (1/n) sum rho(y_i, x_i'beta + B_i'lambda, a) w_i, summed in index order.
  double value(const Eigen::VectorXd& beta, const Eigen::VectorXd& lambda) const;

  // Stacked (gradient over beta, gradient over lambda), length p + k.
  Eigen::VectorXd gradient(const Eigen::VectorXd& beta, const Eigen::VectorXd& lambda) const;

  // Symmetric (p+k) x (p+k) second-derivative matrix (unregularized).
  Eigen::MatrixXd hessian(const Eigen::VectorXd& beta, const Eigen::VectorXd& lambda) const;

  Eigen::Index n() const { return response_.size(); }
  Eigen::Index p() const { return X_.cols(); }
  Eigen::Index k() const { return design_.cols(); }
  Eigen::Index dim() const { return p() + k(); }

  const Eigen::VectorXd& response() const { return response_; }
  const Eigen::MatrixXd& carriers() const { return X_; }
  const Eigen::MatrixXd& design() const { return design_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const ModelFamily& family() const { return family_; }
  double tuning() const { return tuning_; }

  // Linear predictor X beta + B lambda.
  Eigen::VectorXd predictor(const Eigen::VectorXd& beta, const Eigen::VectorXd& lambda) const;

 private:
  void check_dims(const Eigen::VectorXd& beta, const Eigen::VectorXd& lambda) const;

  Eigen::VectorXd response_;
  Eigen::MatrixXd X_;
  Eigen::MatrixXd design_;
  Eigen::MatrixXd augmented_;  // [X design], cached for gradient/Hessian
  ModelFamily family_;
  double tuning_;
  Eigen::VectorXd weights_;
};

}  // namespace isogplm
