// Command-line front end: fit a model from CSV, select the basis size by
// BIC, run simulation campaigns, or export calibration tables. All numeric
// output uses six significant digits and runs are deterministic in the seed.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "isogplm/dataset.hpp"
#include "isogplm/fit.hpp"
#include "isogplm/scale.hpp"
#include "isogplm/simulate.hpp"

namespace {

using namespace isogplm;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNotConverged = 2;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string json_vector(const Eigen::VectorXd& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += num(v[i]);
  }
  return out + "]";
}

struct FitFlags {
  std::string input;
  std::string output = "fit";
  std::string family = "log-gamma";
  std::string estimator = "robust";
  int order = 4;
  int k = 0;  // 0 means BIC selection
  double efficiency = 0.9;
  double c_w = 4.685;
  std::uint64_t seed = 20240501;
  bool jackknife = false;
  bool pre_logged = false;
  bool rescale_t = false;
  std::string placement = "uniform";
  int grid_points = 201;
};

void add_fit_flags(CLI::App* cmd, FitFlags& f) {
  cmd->add_option("-i,--input", f.input, "input CSV with columns y,t,x1..xp")->required();
  cmd->add_option("-o,--output", f.output, "output prefix (<prefix>.json, <prefix>_eta.tsv)");
  cmd->add_option("--family", f.family, "log-gamma | identity | logistic")
      ->check(CLI::IsMember({"log-gamma", "identity", "logistic"}));
  cmd->add_option("--estimator", f.estimator, "robust | classical")
      ->check(CLI::IsMember({"robust", "classical"}));
  cmd->add_option("--order", f.order, "spline order (4 = cubic)")->check(CLI::Range(2, 12));
  cmd->add_option("-k,--basis-size", f.k, "basis size; omit to select by BIC");
  cmd->add_option("--efficiency", f.efficiency, "target efficiency for the adaptive tuning")
      ->check(CLI::Range(std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0)));
  cmd->add_option("--c-w", f.c_w, "leverage weight tuning constant");
  cmd->add_option("--seed", f.seed, "seed for the S-step subsamples");
  cmd->add_option("--placement", f.placement, "knot placement")
      ->check(CLI::IsMember({"uniform", "quantile"}));
  cmd->add_option("--grid-points", f.grid_points, "points in the eta grid file")
      ->check(CLI::Range(2, 100000));
  cmd->add_flag("--jackknife", f.jackknife, "compute jackknife SDs for beta");
  cmd->add_flag("--pre-logged", f.pre_logged, "responses are already on the log scale");
  cmd->add_flag("--rescale-t", f.rescale_t, "min-max rescale t into [0,1]");
}

FitConfig to_config(const FitFlags& f) {
  FitConfig cfg;
  cfg.spline_order = f.order;
  if (f.k > 0) cfg.basis_size = f.k;
  cfg.efficiency = f.efficiency;
  cfg.c_w = f.c_w;
  cfg.seed = f.seed;
  cfg.pre_logged = f.pre_logged;
  cfg.rescale_t = f.rescale_t;
  cfg.placement =
      f.placement == "quantile" ? KnotPlacement::quantile : KnotPlacement::uniform;
  return cfg;
}

FitKind to_kind(const FitFlags& f) {
  if (f.family == "identity") return FitKind::identity;
  if (f.family == "logistic") return FitKind::logistic;
  return f.estimator == "classical" ? FitKind::classical_loggamma
                                    : FitKind::robust_loggamma;
}

void write_fit_json(std::ostream& out, const FitResult& fit) {
  out << "{\n";
  out << "  \"beta\": " << json_vector(fit.beta) << ",\n";
  out << "  \"lambda\": " << json_vector(fit.lambda) << ",\n";
  if (fit.alpha_hat) out << "  \"alpha_hat\": " << num(*fit.alpha_hat) << ",\n";
  if (fit.sigma_hat) out << "  \"sigma_hat\": " << num(*fit.sigma_hat) << ",\n";
  out << "  \"tuning\": " << num(fit.tuning) << ",\n";
  out << "  \"bic\": " << num(fit.bic) << ",\n";
  out << "  \"k\": " << fit.k << ",\n";
  if (fit.t_rescale) {
    out << "  \"t_rescale\": {\"min\": " << num(fit.t_rescale->t_min)
        << ", \"max\": " << num(fit.t_rescale->t_max) << "},\n";
  }
  if (fit.jackknife_se)
    out << "  \"jackknife_se\": " << json_vector(*fit.jackknife_se) << ",\n";
  out << "  \"solver\": {\"termination\": \"" << termination_name(fit.solver.termination)
      << "\", \"iterations\": " << fit.solver.iterations
      << ", \"gradient_norm\": " << num(fit.solver.gradient_norm)
      << ", \"active_constraints\": " << fit.solver.active_set.size() << "},\n";
  out << "  \"converged\": " << (fit.flagged ? "false" : "true") << "\n";
  out << "}\n";
}

void write_eta_grid(std::ostream& out, const FitResult& fit, int points) {
  const double lo = fit.t_rescale ? fit.t_rescale->t_min : 0.0;
  const double hi = fit.t_rescale ? fit.t_rescale->t_max : 1.0;
  out << "t\teta_hat\n";
  for (int i = 0; i < points; ++i) {
    const double frac = static_cast<double>(i) / (points - 1);
    const double t_out = lo + (hi - lo) * frac;
    out << num(t_out) << "\t" << num(fit.eta(frac)) << "\n";
  }
}

int run_fit(const FitFlags& flags, bool write_curve) {
  Dataset data;
  try {
    data = read_dataset_csv_file(flags.input);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  }

  try {
    const FitConfig cfg = to_config(flags);
    const FitKind kind = to_kind(flags);
    const ScoreKind score = flags.estimator == "classical" ? ScoreKind::classical_square
                                                           : ScoreKind::tukey_biweight;
    FitResult result;
    if (write_curve) {
      const BicSelection sel = bic_select(data, cfg, kind, score);
      result = sel.fit;
      std::ofstream curve(flags.output + "_bic.tsv");
      curve << "k\tbic\n";
      for (const auto& [k, bic] : sel.curve) curve << k << "\t" << num(bic) << "\n";
    } else {
      result = fit(data, cfg, kind, score);
    }
    if (flags.jackknife) {
      FitConfig jcfg = cfg;
      jcfg.basis_size = result.k;
      result.jackknife_se = jackknife_se(data, jcfg, kind);
    }

    std::ofstream json(flags.output + ".json");
    write_fit_json(json, result);
    std::ofstream grid(flags.output + "_eta.tsv");
    write_eta_grid(grid, result, flags.grid_points);
    return result.flagged ? kExitNotConverged : kExitOk;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: fit failed: " << err.what() << "\n";
    return kExitNotConverged;
  }
}

struct SimulateFlags {
  int model = 1;
  std::string scheme = "all";
  int nr = 200;
  int n = 100;
  double beta0 = 2.0;
  double alpha = 3.0;
  double efficiency = 0.9;
  std::uint64_t seed = 20240501;
  int parallel = 0;
  std::string out_tsv = "report.tsv";
  std::string out_raw;
  int k = 0;
  std::string estimators = "both";
};

int run_simulate(const SimulateFlags& flags) {
  if (flags.nr <= 0) {
    std::cerr << "error: --nr must be positive\n";
    return kExitUsage;
  }
  ScenarioConfig scenario;
  scenario.n = flags.n;
  scenario.beta0 = flags.beta0;
  scenario.alpha = flags.alpha;
  scenario.eta0 = flags.model == 2 ? EtaModel::model2 : EtaModel::model1;
  scenario.replications = flags.nr;
  scenario.base_seed = flags.seed;
  scenario.fit.efficiency = flags.efficiency;
  if (flags.k > 0) scenario.fit.basis_size = flags.k;

  std::vector<Contamination> schemes;
  if (flags.scheme == "all") {
    schemes = {Contamination::C0, Contamination::C1, Contamination::C2, Contamination::C3};
  } else {
    const std::map<std::string, Contamination> lookup{{"C0", Contamination::C0},
                                                      {"C1", Contamination::C1},
                                                      {"C2", Contamination::C2},
                                                      {"C3", Contamination::C3}};
    schemes = {lookup.at(flags.scheme)};
  }
  std::vector<EstimatorKind> estimators;
  if (flags.estimators == "both" || flags.estimators == "classical")
    estimators.push_back(EstimatorKind::classical);
  if (flags.estimators == "both" || flags.estimators == "robust")
    estimators.push_back(EstimatorKind::robust);

  const int parallel = flags.parallel > 0
                           ? flags.parallel
                           : static_cast<int>(std::thread::hardware_concurrency());
  try {
    std::vector<std::pair<Contamination, SimulationReport>> rows;
    for (Contamination scheme : schemes) {
      ScenarioConfig sc = scenario;
      sc.contamination = scheme;
      rows.emplace_back(scheme, run_campaign(sc, estimators, parallel));
    }
    std::ofstream tsv(flags.out_tsv);
    write_report_tsv(tsv, rows);
    if (!flags.out_raw.empty()) {
      std::ofstream raw(flags.out_raw);
      bool first = true;
      for (const auto& [scheme, report] : rows) {
        if (first) {
          write_records_csv(raw, scheme, report);
          first = false;
        } else {
          std::ostringstream tmp;
          write_records_csv(tmp, scheme, report);
          const std::string text = tmp.str();
          raw << text.substr(text.find('\n') + 1);  // skip the repeated header
        }
      }
    }
    return kExitOk;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  }
}

struct CalibrateFlags {
  std::vector<double> alphas;
  double efficiency = 0.9;
  std::string out = "calibration.csv";
};

int run_calibrate(const CalibrateFlags& flags) {
  if (flags.alphas.empty()) {
    std::cerr << "error: provide at least one --alpha value\n";
    return kExitUsage;
  }
  for (double a : flags.alphas) {
    if (!(a > 0.0)) {
      std::cerr << "error: alpha grid values must be positive\n";
      return kExitUsage;
    }
  }
  try {
    ShapeCalibration cal;
    std::ofstream out(flags.out);
    cal.export_csv(out, flags.alphas);
    return kExitOk;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust monotone partly linear regression (log-Gamma, identity, logistic)"};
  app.require_subcommand(1);

  FitFlags fit_flags;
  CLI::App* fit_cmd = app.add_subcommand("fit", "fit a model from a CSV file");
  add_fit_flags(fit_cmd, fit_flags);

  FitFlags bic_flags;
  CLI::App* bic_cmd =
      app.add_subcommand("bic", "fit with BIC basis-size selection and save the curve");
  add_fit_flags(bic_cmd, bic_flags);

  SimulateFlags sim_flags;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "run a Monte Carlo campaign");
  sim_cmd->add_option("--model", sim_flags.model, "nonparametric component: 1 or 2")
      ->check(CLI::IsMember({1, 2}));
  sim_cmd->add_option("--scheme", sim_flags.scheme, "C0 | C1 | C2 | C3 | all")
      ->check(CLI::IsMember({"C0", "C1", "C2", "C3", "all"}));
  sim_cmd->add_option("--nr", sim_flags.nr, "number of replications");
  sim_cmd->add_option("-n,--sample-size", sim_flags.n, "observations per replication");
  sim_cmd->add_option("--beta0", sim_flags.beta0, "true regression coefficient");
  sim_cmd->add_option("--alpha", sim_flags.alpha, "Gamma shape parameter");
  sim_cmd->add_option("--efficiency", sim_flags.efficiency, "robust tuning efficiency")
      ->check(CLI::Range(std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0)));
  sim_cmd->add_option("--seed", sim_flags.seed, "master seed");
  sim_cmd->add_option("--parallel", sim_flags.parallel, "worker threads (0 = all cores)");
  sim_cmd->add_option("--out", sim_flags.out_tsv, "summary TSV path");
  sim_cmd->add_option("--raw", sim_flags.out_raw, "per-replication CSV path");
  sim_cmd->add_option("-k,--basis-size", sim_flags.k, "fixed basis size (0 = BIC)");
  sim_cmd->add_option("--estimators", sim_flags.estimators, "classical | robust | both")
      ->check(CLI::IsMember({"classical", "robust", "both"}));

  CalibrateFlags cal_flags;
  CLI::App* cal_cmd = app.add_subcommand("calibrate", "export a calibration table");
  cal_cmd->add_option("--alpha", cal_flags.alphas, "shape grid values")->expected(-1);
  cal_cmd->add_option("--efficiency", cal_flags.efficiency, "extra validated efficiency")
      ->check(CLI::Range(std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0)));
  cal_cmd->add_option("--out", cal_flags.out, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  if (fit_cmd->parsed()) return run_fit(fit_flags, false);
  if (bic_cmd->parsed()) return run_fit(bic_flags, true);
  if (sim_cmd->parsed()) return run_simulate(sim_flags);
  if (cal_cmd->parsed()) return run_calibrate(cal_flags);
  return kExitUsage;
}
