#include "isogplm/solver.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace isogplm {

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iter: return "max_iter";
    default: return "line_search_failed";
  }
}

namespace {

constexpr double kTieTol = 1e-12;  // adjacent coefficients this close are tied

// Cholesky of H + tau I with tau the smallest power of ten >= 1e-8 that
// makes the matrix positive definite.
Eigen::LLT<Eigen::MatrixXd> ridged_llt(const Eigen::MatrixXd& H, double* ridge_out) {
  const Eigen::Index d = H.rows();
  double tau = 1e-8;
  for (int attempt = 0; attempt < 20; ++attempt) {
    Eigen::MatrixXd Ht = H + tau * Eigen::MatrixXd::Identity(d, d);
    Eigen::LLT<Eigen::MatrixXd> llt(Ht);
    if (llt.info() == Eigen::Success) {
      if (ridge_out) *ridge_out = tau;
      return llt;
    }
    tau *= 10.0;
  }
  throw std::runtime_error("solver: Hessian could not be regularized to positive definite");
}

// Rows e_i - e_{i+1} on the lambda block for the working set.
Eigen::MatrixXd working_matrix(const std::vector<int>& active, Eigen::Index p,
                               Eigen::Index dim) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(active.size()), dim);
  for (std::size_t j = 0; j < active.size(); ++j) {
    A(static_cast<Eigen::Index>(j), p + active[j]) = 1.0;
    A(static_cast<Eigen::Index>(j), p + active[j] + 1) = -1.0;
  }
  return A;
}

double projected_gradient_norm(const Eigen::VectorXd& grad,
                               const std::vector<int>& active, Eigen::Index p) {
  if (active.empty()) return grad.norm();
  const Eigen::MatrixXd A = working_matrix(active, p, grad.size());
  const Eigen::MatrixXd AAt = A * A.transpose();
  const Eigen::VectorXd coef = AAt.ldlt().solve(A * grad);
  return (grad - A.transpose() * coef).norm();
}

}  // namespace

SolveResult newton_minimize(const Objective& obj, Eigen::VectorXd beta0,
                            Eigen::VectorXd lambda0, const SolverOptions& opts) {
  Eigen::VectorXd beta = std::move(beta0);
  Eigen::VectorXd lambda = std::move(lambda0);
  double value = obj.value(beta, lambda);
  if (!std::isfinite(value))
    throw std::invalid_argument("newton_minimize: objective not finite at the start");

  SolverReport report;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const Eigen::VectorXd grad = obj.gradient(beta, lambda);
    const double gnorm = grad.norm();
    if (opts.trace) opts.trace({iter, value, gnorm, 0}, beta, lambda);
    report.iterations = iter;
    report.gradient_norm = gnorm;
    if (gnorm < opts.tol) {
      report.termination = Termination::converged;
      report.objective = value;
      return {std::move(beta), std::move(lambda), std::move(report)};
    }

    const auto llt = ridged_llt(obj.hessian(beta, lambda), &report.ridge);
    const Eigen::VectorXd step = llt.solve(-grad);

    double scale = 1.0;
    bool accepted = false;
    for (int r = 0; r <= opts.max_backtracks; ++r, scale *= 0.5) {
      const Eigen::VectorXd b = beta + scale * step.head(obj.p());
      const Eigen::VectorXd l = lambda + scale * step.tail(obj.k());
      const double v = obj.value(b, l);
      if (std::isfinite(v) && v < value) {
        beta = b;
        lambda = l;
        value = v;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      report.termination = Termination::line_search_failed;
      report.objective = value;
      return {std::move(beta), std::move(lambda), std::move(report)};
    }
  }
  report.termination = Termination::max_iter;
  report.objective = value;
  report.gradient_norm = obj.gradient(beta, lambda).norm();
  return {std::move(beta), std::move(lambda), std::move(report)};
}

SolveResult active_set_minimize(const Objective& obj, Eigen::VectorXd beta0,
                                Eigen::VectorXd lambda0, const SolverOptions& opts) {
  const Eigen::Index p = obj.p();
  const Eigen::Index k = obj.k();
  const Eigen::Index dim = obj.dim();

  Eigen::VectorXd beta = std::move(beta0);
  Eigen::VectorXd lambda = std::move(lambda0);
  for (Eigen::Index i = 0; i + 1 < k; ++i)
    if (lambda[i] > lambda[i + 1] + kTieTol)
      throw std::invalid_argument("active_set_minimize: start is not feasible");

  // Initial working set: pairs already tied (snapped to exact equality).
  std::vector<int> active;
  for (Eigen::Index i = 0; i + 1 < k; ++i) {
    if (lambda[i + 1] - lambda[i] <= kTieTol) {
      lambda[i + 1] = lambda[i];
      active.push_back(static_cast<int>(i));
    }
  }

  double value = obj.value(beta, lambda);
  if (!std::isfinite(value))
    throw std::invalid_argument("active_set_minimize: objective not finite at the start");

  SolverReport report;
  Eigen::VectorXd grad;
  Eigen::VectorXd multipliers;

  auto finalize = [&](Termination term, int iters) {
    report.termination = term;
    report.iterations = iters;
    report.objective = value;
    report.active_set = active;
    report.multipliers = multipliers;
    report.gradient_norm = projected_gradient_norm(obj.gradient(beta, lambda), active, p);
    return SolveResult{std::move(beta), std::move(lambda), std::move(report)};
  };

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    grad = obj.gradient(beta, lambda);
    const auto llt = ridged_llt(obj.hessian(beta, lambda), &report.ridge);
    const Eigen::VectorXd hg = llt.solve(grad);

    Eigen::VectorXd direction;
    multipliers.resize(0);
    if (active.empty()) {
      direction = -hg;
    } else {
      const Eigen::MatrixXd A = working_matrix(active, p, dim);
      const Eigen::MatrixXd HA = llt.solve(A.transpose());       // H^{-1} A'
      const Eigen::MatrixXd S = A * HA;                          // A H^{-1} A'
      multipliers = S.ldlt().solve(-(A * hg));
      direction = -hg - HA * multipliers;
    }

    if (opts.trace) {
      opts.trace({iter, value, grad.norm(), static_cast<int>(active.size())}, beta, lambda);
    }

    if (direction.norm() < opts.tol) {
      if (active.empty()) return finalize(Termination::converged, iter);
      Eigen::Index worst;
      const double mu_min = multipliers.minCoeff(&worst);
      if (mu_min >= 0.0) return finalize(Termination::converged, iter);
      active.erase(active.begin() + worst);
      continue;
    }

    // Largest step keeping the inactive gaps nonnegative.
    double nu1 = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i + 1 < k; ++i) {
      if (std::find(active.begin(), active.end(), static_cast<int>(i)) != active.end())
        continue;
      const double dgap = direction[p + i + 1] - direction[p + i];
      if (dgap < 0.0) nu1 = std::min(nu1, -(lambda[i + 1] - lambda[i]) / dgap);
    }

    bool accepted = false;
    double previous = -1.0;
    for (int r = 0; r <= opts.max_backtracks; ++r) {
      const double candidate = std::min(std::pow(0.5, r), nu1);
      if (candidate == previous) continue;  // still capped by nu1
      previous = candidate;
      const Eigen::VectorXd b = beta + candidate * direction.head(p);
      const Eigen::VectorXd l = lambda + candidate * direction.tail(k);
      const double v = obj.value(b, l);
      if (std::isfinite(v) && v < value) {
        beta = b;
        lambda = l;
        value = v;
        accepted = true;
        break;
      }
    }
    if (!accepted) return finalize(Termination::line_search_failed, iter);

    // Pick up constraints that became tight at the step (including the
    // blocking pair when step == nu1) and restore exact equality.
    for (Eigen::Index i = 0; i + 1 < k; ++i) {
      if (lambda[i + 1] - lambda[i] <= kTieTol) {
        if (lambda[i + 1] != lambda[i]) lambda[i + 1] = lambda[i];
        if (std::find(active.begin(), active.end(), static_cast<int>(i)) == active.end())
          active.push_back(static_cast<int>(i));
      }
    }
    std::sort(active.begin(), active.end());
  }
  return finalize(Termination::max_iter, opts.max_iter);
}

}  // namespace isogplm
