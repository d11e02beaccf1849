#include "isogplm/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "isogplm/quadrature.hpp"
#include "isogplm/rng.hpp"

namespace isogplm {

namespace {

struct WarmStart {
  Eigen::VectorXd beta;
  Eigen::VectorXd lambda;
};

struct Prepared {
  Eigen::VectorXd response;  // z for log-Gamma kinds, y otherwise
  Eigen::MatrixXd X;
  Eigen::VectorXd t;
  std::shared_ptr<const SplineBasis> basis;
  Eigen::MatrixXd design;
  Eigen::VectorXd weights;
  std::optional<TRescale> rescale;
};

Eigen::VectorXd ones(Eigen::Index n) { return Eigen::VectorXd::Ones(n); }

bool robust_score(ScoreKind s) { return s == ScoreKind::tukey_biweight; }

Prepared prepare(const Dataset& data, const FitConfig& cfg, FitKind kind,
                 ScoreKind score, int k) {
  const Eigen::Index n = data.n();
  if (n == 0) throw std::invalid_argument("fit: empty dataset");
  if (k < cfg.spline_order)
    throw std::invalid_argument("fit: basis size k must be at least the spline order");

  Prepared prep;
  prep.X = data.X;

  prep.t = data.t;
  if (cfg.rescale_t) {
    const double lo = prep.t.minCoeff();
    const double hi = prep.t.maxCoeff();
    if (!(hi > lo)) throw std::invalid_argument("fit: cannot rescale a constant t column");
    prep.t = (prep.t.array() - lo) / (hi - lo);
    prep.rescale = TRescale{lo, hi};
  } else if (prep.t.size() > 0 &&
             (prep.t.minCoeff() < 0.0 || prep.t.maxCoeff() > 1.0)) {
    throw std::invalid_argument(
        "fit: t outside [0,1]; enable min-max rescaling to map it automatically");
  }

  switch (kind) {
    case FitKind::robust_loggamma:
    case FitKind::classical_loggamma:
      if (cfg.pre_logged) {
        prep.response = data.y;
      } else {
        if ((data.y.array() <= 0.0).any())
          throw std::invalid_argument(
              "fit: log-Gamma responses must be strictly positive (or pre-logged)");
        prep.response = data.y.array().log();
      }
      break;
    case FitKind::identity:
      prep.response = data.y;
      break;
    case FitKind::logistic:
      for (Eigen::Index i = 0; i < n; ++i)
        if (data.y[i] != 0.0 && data.y[i] != 1.0)
          throw std::domain_error("fit: logistic responses must be 0 or 1");
      for (Eigen::Index j = 0; j < data.p(); ++j)
        if (data.X.col(j).maxCoeff() == data.X.col(j).minCoeff())
          throw std::invalid_argument(
              "fit: constant carrier column (intercepts are not identifiable in the "
              "logistic model)");
      prep.response = data.y;
      break;
  }

  std::vector<double> tvals(prep.t.data(), prep.t.data() + prep.t.size());
  auto basis = std::make_shared<SplineBasis>(
      build_knots(tvals, k - cfg.spline_order, cfg.spline_order, cfg.placement));
  prep.design = basis->design(prep.t);
  prep.basis = std::move(basis);

  const bool weighted = robust_score(score) && kind != FitKind::classical_loggamma &&
                        cfg.use_leverage_weights && data.p() > 0;
  prep.weights = weighted ? leverage_weights(data.X, cfg.c_w) : ones(n);
  return prep;
}

// ---------------------------------------------------------------------------
// Nelder-Mead descent on the S-step sigma profile.

Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x0, int max_iter, double* best_value) {
  const int d = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> x(d + 1, x0);
  std::vector<double> fx(d + 1);
  for (int i = 1; i <= d; ++i)
    x[i][i - 1] += 0.1 * std::max(0.1, std::abs(x0[i - 1]));
  for (int i = 0; i <= d; ++i) fx[i] = f(x[i]);

  std::vector<int> ord(d + 1);
  for (int it = 0; it < max_iter; ++it) {
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return fx[a] < fx[b]; });
    const int best = ord[0], worst = ord[d], second = ord[d - 1];
    if (fx[worst] - fx[best] < 1e-12 * (1.0 + std::abs(fx[best]))) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int i = 0; i <= d; ++i)
      if (i != worst) centroid += x[i];
    centroid /= d;

    const Eigen::VectorXd refl = centroid + (centroid - x[worst]);
    const double f_refl = f(refl);
    if (f_refl < fx[best]) {
      const Eigen::VectorXd expa = centroid + 2.0 * (centroid - x[worst]);
      const double f_expa = f(expa);
      if (f_expa < f_refl) {
        x[worst] = expa;
        fx[worst] = f_expa;
      } else {
        x[worst] = refl;
        fx[worst] = f_refl;
      }
    } else if (f_refl < fx[second]) {
      x[worst] = refl;
      fx[worst] = f_refl;
    } else {
      const Eigen::VectorXd contr =
          centroid + 0.5 * ((f_refl < fx[worst] ? refl : x[worst]) - centroid);
      const double f_contr = f(contr);
      if (f_contr < std::min(f_refl, fx[worst])) {
        x[worst] = contr;
        fx[worst] = f_contr;
      } else {
        for (int i = 0; i <= d; ++i) {
          if (i == best) continue;
          x[i] = x[best] + 0.5 * (x[i] - x[best]);
          fx[i] = f(x[i]);
        }
      }
    }
  }
  const auto best_it = std::min_element(fx.begin(), fx.end());
  if (best_value) *best_value = *best_it;
  return x[static_cast<int>(best_it - fx.begin())];
}

// ---------------------------------------------------------------------------
// S-step: minimize the M-scale of the root deviances over (beta, lambda).

Eigen::VectorXd root_deviances(const Eigen::VectorXd& z, const Eigen::MatrixXd& D,
                               const Eigen::VectorXd& theta) {
  Eigen::VectorXd v = z - D * theta;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = std::min(std::sqrt(deviance_d(v[i])), 1e150);  // keep brackets finite
  return v;
}

struct SStep {
  Eigen::VectorXd theta;
  double sigma = 0.0;
};

SStep s_step(const Eigen::VectorXd& z, const Eigen::MatrixXd& D, const FitConfig& cfg,
             int k, const std::optional<WarmStart>& warm) {
  const Eigen::Index n = z.size();
  const Eigen::Index dim = D.cols();
  if (n <= dim)
    throw std::invalid_argument("fit: need more observations than parameters (n > p + k)");

  const MScaleConfig scale_cfg{ScaleScoreKind::tukey_biweight, 0.5, 1.0, 1e-10, 200};
  auto profile = [&](const Eigen::VectorXd& theta) {
    try {
      return m_scale(root_deviances(z, D, theta), scale_cfg);
    } catch (const ExactFitError&) {
      return 0.0;
    }
  };

  Rng rng(cfg.seed, 17, static_cast<std::uint64_t>(k));
  std::vector<SStep> candidates;
  candidates.reserve(cfg.s_subsamples + 1);
  for (int s = 0; s < cfg.s_subsamples; ++s) {
    const auto idx = rng.sample_indices(static_cast<int>(n), static_cast<int>(dim));
    Eigen::MatrixXd Ds(dim, dim);
    Eigen::VectorXd zs(dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
      Ds.row(r) = D.row(idx[r]);
      zs[r] = z[idx[r]];
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(Ds);
    if (!lu.isInvertible()) continue;  // collinear subsample
    const Eigen::VectorXd theta = lu.solve(zs);
    if (!theta.allFinite()) continue;
    candidates.push_back({theta, profile(theta)});
  }
  if (warm) {
    Eigen::VectorXd theta(dim);
    theta << warm->beta, warm->lambda;
    candidates.push_back({theta, profile(theta)});
  }
  if (candidates.empty())
    throw std::runtime_error("fit: S-step degenerate, every subsample design was singular");

  std::sort(candidates.begin(), candidates.end(),
            [](const SStep& a, const SStep& b) { return a.sigma < b.sigma; });

  SStep best = candidates.front();
  const int refine = std::min<int>(cfg.s_refine, static_cast<int>(candidates.size()));
  for (int i = 0; i < refine; ++i) {
    double value = 0.0;
    Eigen::VectorXd theta =
        nelder_mead(profile, candidates[i].theta, cfg.s_nm_max_iter, &value);
    if (value < best.sigma) best = {std::move(theta), value};
  }
  return best;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd fallback_lambda(int k) {
  Eigen::VectorXd lambda(k);
  lambda[0] = 0.0;
  if (k > 1) lambda[1] = 0.0;
  for (int i = 2; i < k; ++i) lambda[i] = static_cast<double>(i - 1);
  return lambda;
}

// Step 4: keep an already-feasible unconstrained solution, otherwise run the
// active-set method from the ordered fallback start.
SolveResult constrained_step(const Objective& obj, SolveResult unconstrained,
                             const FitConfig& cfg) {
  if (is_feasible(unconstrained.lambda)) return unconstrained;
  return active_set_minimize(obj, unconstrained.beta,
                             fallback_lambda(static_cast<int>(obj.k())), cfg.solver);
}

double bic_value(const Objective& obj, const Eigen::VectorXd& beta,
                 const Eigen::VectorXd& lambda) {
  const double n = static_cast<double>(obj.n());
  return obj.value(beta, lambda) +
         std::log(n) / (2.0 * n) * (static_cast<double>(obj.k()) + obj.p());
}

FitResult assemble(const Prepared& prep, const Objective& obj, SolveResult solved,
                   int k) {
  FitResult out;
  out.beta = std::move(solved.beta);
  out.lambda = std::move(solved.lambda);
  out.eta = MonotoneSpline{prep.basis, out.lambda};
  out.tuning = obj.tuning();
  out.bic = bic_value(obj, out.beta, out.lambda);
  out.k = k;
  out.solver = std::move(solved.report);
  out.t_rescale = prep.rescale;
  out.flagged = out.solver.termination != Termination::converged;
  return out;
}

const ShapeCalibration& calibration_of(const FitConfig& cfg) {
  if (cfg.calibration) return *cfg.calibration;
  static const ShapeCalibration shared;
  return shared;
}

FitResult fit_fixed_k(const Dataset& data, const FitConfig& cfg, FitKind kind,
                      ScoreKind score, int k, const std::optional<WarmStart>& warm) {
  switch (kind) {
    case FitKind::robust_loggamma: {
      const Prepared prep = prepare(data, cfg, kind, ScoreKind::tukey_biweight, k);
      Eigen::MatrixXd D(prep.response.size(), prep.X.cols() + k);
      if (prep.X.cols() > 0) D.leftCols(prep.X.cols()) = prep.X;
      D.rightCols(k) = prep.design;

      // Step 1: S-estimate and its scale.
      const SStep s = s_step(prep.response, D, cfg, k, warm);
      if (!(s.sigma > 0.0))
        throw std::runtime_error("fit: S-step produced a zero scale (exact fit)");

      // Step 2: adaptive tuning from the estimated shape.
      const ShapeCalibration& cal = calibration_of(cfg);
      const double alpha_hat = cal.alpha_from_sigma(s.sigma);
      const double c_n = std::max(s.sigma, cal.tuning_for_efficiency(alpha_hat, cfg.efficiency));

      // Step 3: unconstrained MM fit started at the S-estimate.
      const Objective obj(prep.response, prep.X, prep.design,
                          ModelFamily::log_gamma(ScoreKind::tukey_biweight), c_n,
                          prep.weights);
      SolveResult mm = newton_minimize(obj, s.theta.head(prep.X.cols()),
                                       s.theta.tail(k), cfg.solver);

      // Step 4: ordered-coefficient constraints.
      FitResult out = assemble(prep, obj, constrained_step(obj, std::move(mm), cfg), k);
      out.alpha_hat = alpha_hat;
      out.sigma_hat = s.sigma;
      return out;
    }

    case FitKind::classical_loggamma: {
      const Prepared prep = prepare(data, cfg, kind, ScoreKind::classical_square, k);
      const Objective obj(prep.response, prep.X, prep.design,
                          ModelFamily::log_gamma(ScoreKind::classical_square), 1.0,
                          ones(prep.response.size()));
      Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(prep.X.cols());
      Eigen::VectorXd lambda0 = Eigen::VectorXd::Zero(k);
      if (warm) {
        beta0 = warm->beta;
        lambda0 = warm->lambda;
      }
      SolveResult sol = newton_minimize(obj, beta0, lambda0, cfg.solver);
      return assemble(prep, obj, constrained_step(obj, std::move(sol), cfg), k);
    }

    case FitKind::identity: {
      const Prepared prep = prepare(data, cfg, kind, score, k);
      const Eigen::Index n = prep.response.size();

      if (score == ScoreKind::classical_square) {
        // Plain least squares plus the constraint step; tuning cancels.
        const Objective obj(prep.response, prep.X, prep.design,
                            ModelFamily::identity(ScoreKind::classical_square), 1.0,
                            ones(n));
        Eigen::VectorXd beta0 = warm ? warm->beta : Eigen::VectorXd::Zero(prep.X.cols());
        Eigen::VectorXd lambda0 = warm ? warm->lambda : Eigen::VectorXd::Zero(k);
        SolveResult sol = newton_minimize(obj, beta0, lambda0, cfg.solver);
        return assemble(prep, obj, constrained_step(obj, std::move(sol), cfg), k);
      }

      // Least-squares start, then the preliminary Tukey fit with unit scale.
      const Objective ls_obj(prep.response, prep.X, prep.design,
                             ModelFamily::identity(ScoreKind::classical_square), 1.0,
                             ones(n));
      SolveResult ls = newton_minimize(ls_obj, Eigen::VectorXd::Zero(prep.X.cols()),
                                       Eigen::VectorXd::Zero(k), cfg.solver);
      const Objective pre_obj(prep.response, prep.X, prep.design,
                              ModelFamily::identity(ScoreKind::tukey_biweight), 1.0,
                              prep.weights);
      SolveResult pre = newton_minimize(pre_obj, ls.beta, ls.lambda, cfg.solver);

      Eigen::VectorXd res = prep.response - pre_obj.predictor(pre.beta, pre.lambda);
      std::vector<double> abs_res(res.size());
      for (Eigen::Index i = 0; i < res.size(); ++i) abs_res[i] = std::abs(res[i]);
      MScaleConfig scale_cfg;
      if (cfg.identity_scale == IdentityScaleKind::median_abs) {
        scale_cfg.score = ScaleScoreKind::indicator;
        scale_cfg.c = 1.0;
      }
      double kappa = 0.0;
      try {
        kappa = m_scale(abs_res, scale_cfg);
      } catch (const ExactFitError&) {
        throw std::runtime_error("fit: zero residual scale in the identity-link pipeline");
      }
      if (!(kappa > 0.0))
        throw std::runtime_error("fit: zero residual scale in the identity-link pipeline");

      const double a = cfg.identity_tuning_multiplier * kappa;
      const Objective obj(prep.response, prep.X, prep.design,
                          ModelFamily::identity(ScoreKind::tukey_biweight), a,
                          prep.weights);
      SolveResult mm = newton_minimize(obj, pre.beta, pre.lambda, cfg.solver);
      FitResult out = assemble(prep, obj, constrained_step(obj, std::move(mm), cfg), k);
      out.sigma_hat = kappa;
      return out;
    }

    case FitKind::logistic: {
      const Prepared prep = prepare(data, cfg, kind, score, k);
      const Objective obj(prep.response, prep.X, prep.design,
                          ModelFamily::logistic(score), 1.0,
                          score == ScoreKind::classical_square
                              ? ones(prep.response.size())
                              : prep.weights);
      Eigen::VectorXd beta0 = warm ? warm->beta : Eigen::VectorXd::Zero(prep.X.cols());
      Eigen::VectorXd lambda0 = warm ? warm->lambda : Eigen::VectorXd::Zero(k);
      SolveResult sol = newton_minimize(obj, beta0, lambda0, cfg.solver);
      FitResult out = assemble(prep, obj, constrained_step(obj, std::move(sol), cfg), k);
      if (out.beta.size() > 0 && out.beta.norm() > 1e3) out.flagged = true;  // separation
      return out;
    }
  }
  throw std::logic_error("fit: unknown kind");
}

}  // namespace

std::pair<int, int> default_bic_range(Eigen::Index n) {
  const double r = std::pow(static_cast<double>(n), 0.2);
  const int lo = static_cast<int>(std::ceil(std::max(r / 2.0, 4.0)));
  const int hi = static_cast<int>(std::floor(8.0 + 2.0 * r));
  return {lo, hi};
}

int select_first_local_min(std::span<const std::pair<int, double>> curve) {
  if (curve.empty()) throw std::invalid_argument("select_first_local_min: empty curve");
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const bool left_ok = (i == 0) || curve[i].second <= curve[i - 1].second;
    const bool right_ok = (i + 1 == curve.size()) || curve[i].second <= curve[i + 1].second;
    if (left_ok && right_ok) return curve[i].first;
  }
  return curve.back().first;  // unreachable: a finite sequence has a local min
}

BicSelection bic_select(const Dataset& data, const FitConfig& cfg, FitKind kind,
                        ScoreKind score, std::optional<std::pair<int, int>> k_range) {
  if (kind == FitKind::classical_loggamma) score = ScoreKind::classical_square;
  auto [lo, hi] = k_range ? *k_range : default_bic_range(data.n());
  lo = std::max(lo, cfg.spline_order);
  if (lo > hi) throw std::invalid_argument("bic_select: empty basis-size range");

  BicSelection out;
  std::vector<std::pair<int, FitResult>> fits;
  std::optional<WarmStart> warm;
  for (int k = lo; k <= hi; ++k) {
    try {
      FitConfig per_k = cfg;
      per_k.basis_size = k;
      FitResult f = fit_fixed_k(data, per_k, kind, score, k, warm);
      // Pad by repeating the last coefficient: feasibility is preserved.
      WarmStart next{f.beta, Eigen::VectorXd(k + 1)};
      next.lambda.head(k) = f.lambda;
      next.lambda[k] = f.lambda[k - 1];
      warm = std::move(next);
      out.curve.emplace_back(k, f.bic);
      fits.emplace_back(k, std::move(f));
    } catch (const std::exception& err) {
      out.failures.emplace_back(k, err.what());
    }
  }
  if (fits.empty())
    throw std::runtime_error("bic_select: every candidate basis size failed");

  out.k = select_first_local_min(out.curve);
  for (auto& [k, f] : fits) {
    if (k == out.k) {
      out.fit = std::move(f);
      break;
    }
  }
  return out;
}

FitResult fit(const Dataset& data, const FitConfig& cfg, FitKind kind, ScoreKind score) {
  if (cfg.basis_size) return fit_fixed_k(data, cfg, kind, score, *cfg.basis_size, {});
  return bic_select(data, cfg, kind, score).fit;
}

FitResult fit_robust_loggamma(const Dataset& data, const FitConfig& cfg) {
  return fit(data, cfg, FitKind::robust_loggamma, ScoreKind::tukey_biweight);
}

FitResult fit_classical(const Dataset& data, const FitConfig& cfg) {
  return fit(data, cfg, FitKind::classical_loggamma, ScoreKind::classical_square);
}

FitResult fit_identity(const Dataset& data, const FitConfig& cfg, ScoreKind score) {
  return fit(data, cfg, FitKind::identity, score);
}

FitResult fit_logistic(const Dataset& data, const FitConfig& cfg, ScoreKind score) {
  return fit(data, cfg, FitKind::logistic, score);
}

Eigen::VectorXd jackknife_se(const Dataset& data, const FitConfig& cfg, FitKind kind) {
  const Eigen::Index n = data.n();
  if (n < 20) throw std::invalid_argument("jackknife_se: need at least 20 observations");
  const ScoreKind score = (kind == FitKind::classical_loggamma)
                              ? ScoreKind::classical_square
                              : ScoreKind::tukey_biweight;

  const FitResult full = fit(data, cfg, kind, score);
  FitConfig frozen = cfg;
  frozen.basis_size = full.k;
  const WarmStart warm{full.beta, full.lambda};

  std::vector<Eigen::VectorXd> betas;
  betas.reserve(n);
  Eigen::Index failures = 0;
  for (Eigen::Index drop = 0; drop < n; ++drop) {
    Dataset loo;
    loo.y.resize(n - 1);
    loo.t.resize(n - 1);
    loo.X.resize(n - 1, data.p());
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == drop) continue;
      loo.y[r] = data.y[i];
      loo.t[r] = data.t[i];
      loo.X.row(r) = data.X.row(i);
      ++r;
    }
    try {
      betas.push_back(fit_fixed_k(loo, frozen, kind, score, full.k, warm).beta);
    } catch (const std::exception&) {
      ++failures;
    }
  }
  if (failures * 10 > n)
    throw std::runtime_error("jackknife_se: more than 10% of leave-one-out fits failed");
  const auto m = static_cast<double>(betas.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(data.p());
  for (const auto& b : betas) mean += b;
  mean /= m;
  Eigen::VectorXd ss = Eigen::VectorXd::Zero(data.p());
  for (const auto& b : betas) ss += (b - mean).cwiseAbs2();
  return ((m - 1.0) / m * ss.array()).sqrt();
}

double ise(const MonotoneSpline& eta_hat, const std::function<double(double)>& eta0,
           const Eigen::VectorXd& t_values) {
  if (t_values.size() == 0) throw std::invalid_argument("ise: empty evaluation points");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < t_values.size(); ++i) {
    const double diff = eta_hat(t_values[i]) - eta0(t_values[i]);
    acc += diff * diff;
  }
  return acc / static_cast<double>(t_values.size());
}

}  // namespace isogplm
