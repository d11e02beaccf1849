#include "isogplm/scale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "isogplm/loss.hpp"
#include "isogplm/quadrature.hpp"

namespace isogplm {

namespace {

double scale_score(ScaleScoreKind kind, double t) {
  if (kind == ScaleScoreKind::indicator) return std::abs(t) > 1.0 ? 1.0 : 0.0;
  const ScoreFunction tukey{ScoreKind::tukey_biweight};
  return tukey.phi(t);
}

}  // namespace

double m_scale(std::span<const double> values, const MScaleConfig& cfg) {
  const std::size_t n = values.size();
  if (n == 0) throw std::invalid_argument("m_scale: empty sample");
  if (!(cfg.b > 0.0 && cfg.b < 1.0)) throw std::invalid_argument("m_scale: b must lie in (0,1)");
  if (!(cfg.c > 0.0)) throw std::invalid_argument("m_scale: c must be positive");

  double min_nonzero = std::numeric_limits<double>::infinity();
  double max_value = 0.0;
  std::size_t nonzero = 0;
  for (double v : values) {
    if (!(v >= 0.0)) throw std::invalid_argument("m_scale: values must be nonnegative");
    if (v > 0.0) {
      ++nonzero;
      min_nonzero = std::min(min_nonzero, v);
      max_value = std::max(max_value, v);
    }
  }
  if (static_cast<double>(nonzero) < cfg.b * static_cast<double>(n))
    throw ExactFitError("m_scale: too many zero values, scale degenerates to 0");

  auto mean_score = [&](double sigma) {
    double acc = 0.0;
    const double inv = 1.0 / (cfg.c * sigma);
    for (double v : values) acc += scale_score(cfg.score, v * inv);
    return acc / static_cast<double>(n) - cfg.b;
  };

  double lo = min_nonzero / 10.0;
  double hi = 10.0 * max_value;
  int guard = 0;
  while (mean_score(lo) < 0.0) {
    lo /= 10.0;
    if (++guard > 400) throw std::runtime_error("m_scale: failed to bracket from below");
  }
  guard = 0;
  while (mean_score(hi) > 0.0) {
    hi *= 10.0;
    if (++guard > 400) throw std::runtime_error("m_scale: failed to bracket from above");
  }

  for (int it = 0; it < cfg.max_iter && hi - lo > cfg.tol * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_score(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

ShapeCalibration::ShapeCalibration(Options opts) : opts_(opts) {
  if (!(opts_.b > 0.0 && opts_.b < 1.0))
    throw std::invalid_argument("ShapeCalibration: b must lie in (0,1)");
}

double ShapeCalibration::sigma_star_exact(double alpha) const {
  if (!(alpha > 0.0)) throw std::invalid_argument("sigma_star: alpha must be positive");
  const ScoreFunction tukey{ScoreKind::tukey_biweight};
  auto mean_score = [&](double sigma) {
    return expect_log_gamma(
               [&](double u) { return tukey.phi(std::sqrt(deviance_d(u)) / sigma); },
               alpha, opts_.quad_tol) -
           opts_.b;
  };
  double lo = 1e-4, hi = 10.0;
  int guard = 0;
  while (mean_score(lo) < 0.0) {
    lo /= 10.0;
    if (++guard > 60) throw std::runtime_error("sigma_star: failed to bracket from below");
  }
  guard = 0;
  while (mean_score(hi) > 0.0) {
    hi *= 10.0;
    if (++guard > 60) throw std::runtime_error("sigma_star: failed to bracket from above");
  }
  while (hi - lo > 1e-11 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (mean_score(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

void ShapeCalibration::ensure_table() const {
  std::call_once(table_once_, [&] {
    // Fixed log-spaced grid; keeping the grid state-independent makes every
    // call deterministic regardless of call interleaving.
    constexpr int kGrid = 121;
    const double llo = std::log(opts_.alpha_min);
    const double lhi = std::log(opts_.alpha_max);
    table_.reserve(kGrid);
    for (int i = 0; i < kGrid; ++i) {
      const double alpha = std::exp(llo + (lhi - llo) * i / (kGrid - 1));
      table_.emplace_back(alpha, sigma_star_exact(alpha));
    }
    for (int i = 0; i + 1 < kGrid; ++i) {
      if (table_[i].second <= table_[i + 1].second)
        throw std::runtime_error("ShapeCalibration: sigma* table not strictly decreasing");
    }
  });
}

double ShapeCalibration::sigma_star(double alpha) const { return sigma_star_exact(alpha); }

double ShapeCalibration::alpha_from_sigma(double sigma_hat) const {
  ensure_table();
  if (!(sigma_hat > 0.0))
    throw std::invalid_argument("alpha_from_sigma: sigma must be positive");
  if (sigma_hat > table_.front().second || sigma_hat < table_.back().second) {
    std::ostringstream msg;
    msg << "alpha_from_sigma: sigma " << sigma_hat << " outside the attainable range ["
        << table_.back().second << ", " << table_.front().second << "] for alpha in ["
        << opts_.alpha_min << ", " << opts_.alpha_max << "]";
    throw std::out_of_range(msg.str());
  }
  // Bracket on the cached monotone table, then bisect on the exact map.
  auto it = std::lower_bound(
      table_.begin(), table_.end(), sigma_hat,
      [](const std::pair<double, double>& row, double s) { return row.second > s; });
  if (it == table_.begin()) return table_.front().first;
  double alo = std::prev(it)->first;
  double ahi = (it == table_.end()) ? table_.back().first : it->first;
  while (ahi - alo > 1e-9 * std::max(1.0, ahi)) {
    const double mid = 0.5 * (alo + ahi);
    if (sigma_star_exact(mid) > sigma_hat)
      alo = mid;
    else
      ahi = mid;
  }
  return 0.5 * (alo + ahi);
}

double ShapeCalibration::efficiency(double alpha, double c) const {
  const ModelFamily family = ModelFamily::log_gamma(ScoreKind::tukey_biweight);
  const double A = expect_log_gamma([&](double u) { return chi(family, u, 0.0, c); },
                                    alpha, opts_.quad_tol);
  const double B = expect_log_gamma(
      [&](double u) {
        const double p = psi(family, u, 0.0, c);
        return p * p;
      },
      alpha, opts_.quad_tol);
  if (!(B > 0.0)) return 0.0;
  return A * A / (alpha * B);
}

double ShapeCalibration::tuning_for_efficiency(double alpha, double e) const {
  if (!(alpha > 0.0)) throw std::invalid_argument("tuning_for_efficiency: alpha must be positive");
  if (!(e > 0.0 && e < 1.0)) throw std::invalid_argument("tuning_for_efficiency: e must lie in (0,1)");

  constexpr double kLo = 0.05, kHi = 20.0;
  auto solve = [&](double lo, double hi) {
    while (hi - lo > 1e-9 * std::max(1.0, hi)) {
      const double mid = 0.5 * (lo + hi);
      if (efficiency(alpha, mid) < e)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  };

  const double e_lo = efficiency(alpha, kLo);
  const double e_hi = efficiency(alpha, kHi);
  if (e_lo <= e && e <= e_hi) {
    const double c = solve(kLo, kHi);
    if (std::abs(efficiency(alpha, c) - e) < 1e-6) return c;
    // Monotonicity must have failed locally; fall back to a grid scan.
    double best_c = kLo;
    double best_gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 400; ++i) {
      const double cc = kLo * std::pow(kHi / kLo, i / 400.0);
      const double gap = std::abs(efficiency(alpha, cc) - e);
      if (gap < best_gap) {
        best_gap = gap;
        best_c = cc;
      }
    }
    if (best_gap < 1e-4) return best_c;
  }

  std::ostringstream msg;
  msg << "tuning_for_efficiency: no tuning constant in [" << kLo << ", " << kHi
      << "] attains efficiency " << e << " at alpha " << alpha << "; curve:";
  for (double cc : {0.05, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0})
    msg << " e(" << cc << ")=" << efficiency(alpha, cc);
  throw CalibrationError(msg.str());
}

double ShapeCalibration::adaptive_tuning(double sigma_hat, double e) const {
  const double alpha_hat = alpha_from_sigma(sigma_hat);
  return std::max(sigma_hat, tuning_for_efficiency(alpha_hat, e));
}

void ShapeCalibration::export_csv(std::ostream& out, std::span<const double> alphas) const {
  out << "alpha,sigma_star,c_e_090,c_e_095\n";
  char buf[160];
  for (double alpha : alphas) {
    std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g,%.6g\n", alpha, sigma_star(alpha),
                  tuning_for_efficiency(alpha, 0.90), tuning_for_efficiency(alpha, 0.95));
    out << buf;
  }
}

std::vector<std::array<double, 4>> ShapeCalibration::import_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "alpha,sigma_star,c_e_090,c_e_095")
    throw std::invalid_argument("calibration CSV: bad header");
  std::vector<std::array<double, 4>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 4> row{};
    std::istringstream ss(line);
    std::string cell;
    for (int j = 0; j < 4; ++j) {
      if (!std::getline(ss, cell, ','))
        throw std::invalid_argument("calibration CSV: short row '" + line + "'");
      row[j] = std::stod(cell);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace isogplm
