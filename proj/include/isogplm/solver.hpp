// Unconstrained damped Newton and the active-set method for minimizing the
// sample objective under the ordered-coefficient constraints
// lambda_1 <= ... <= lambda_k.
#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "isogplm/objective.hpp"

namespace isogplm {

enum class Termination { converged, max_iter, line_search_failed };

const char* termination_name(Termination t);

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;
  int active_count = 0;
};

struct SolverReport {
  int iterations = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;       // projected gradient norm at exit
  std::vector<int> active_set;      // indices i with lambda_i = lambda_{i+1} (0-based)
  Eigen::VectorXd multipliers;      // Lagrange multipliers for the active rows
  Termination termination = Termination::converged;
  double ridge = 0.0;               // Hessian ridge used at the last iteration
};

struct SolverOptions {
  double tol = 1e-9;
  int max_iter = 300;
  int max_backtracks = 30;
  // Optional per-iteration hook (trace output, test instrumentation).
  std::function<void(const IterationRecord&, const Eigen::VectorXd& beta,
                     const Eigen::VectorXd& lambda)>
      trace;
};

struct SolveResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd lambda;
  SolverReport report;
};

// Damped Newton with halving line search; the Hessian is made positive
// definite by the smallest power-of-ten ridge >= 1e-8 before inversion.
// For bounded losses only convergence to a stationary point is promised.
SolveResult newton_minimize(const Objective& obj, Eigen::VectorXd beta0,
                            Eigen::VectorXd lambda0, const SolverOptions& opts = {});

// Active-set loop: feasible Newton direction restricted to the working set,
// Lagrange-multiplier release of the most negative constraint, maximum
// feasible step, and halving line search. The start must be feasible and
// every iterate stays feasible.
SolveResult active_set_minimize(const Objective& obj, Eigen::VectorXd beta0,
                                Eigen::VectorXd lambda0, const SolverOptions& opts = {});

}  // namespace isogplm
