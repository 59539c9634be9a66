#ifndef RELERR_CLI_HPP
#define RELERR_CLI_HPP

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "relerr/asymptotics.hpp"
#include "relerr/data.hpp"
#include "relerr/errors.hpp"
#include "relerr/estimator.hpp"
#include "relerr/io/csv.hpp"
#include "relerr/io/report.hpp"
#include "relerr/lag.hpp"
#include "relerr/loss.hpp"
#include "relerr/objective.hpp"
#include "relerr/simulation.hpp"
#include "relerr/util.hpp"

namespace relerr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitNotConverged = 2;

namespace detail {

// Day count since 1970-01-01 for a civil date (proleptic Gregorian).
inline long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return era * 146097L + static_cast<long>(doe) - 719468L;
}

// true for Saturday/Sunday given an ISO-8601 timestamp (date prefix suffices).
inline bool is_weekend(const std::string& timestamp) {
  auto digits = [&](std::size_t at, std::size_t len) {
    for (std::size_t i = at; i < at + len; ++i)
      if (at + len > timestamp.size() || !std::isdigit(static_cast<unsigned char>(timestamp[i])))
        throw DataError("timestamp '" + timestamp + "' is not ISO-8601 (expected YYYY-MM-DD...)");
    return std::stoi(timestamp.substr(at, len));
  };
  if (timestamp.size() < 10 || timestamp[4] != '-' || timestamp[7] != '-')
    throw DataError("timestamp '" + timestamp + "' is not ISO-8601 (expected YYYY-MM-DD...)");
  const int y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
  // 1970-01-01 was a Thursday; index 0 = Thursday, so 2 = Saturday, 3 = Sunday.
  const long wd = ((days_from_civil(y, m, d) % 7) + 7) % 7;
  return wd == 2 || wd == 3;
}

inline unsigned resolve_threads() {
  const char* env = std::getenv("RELERR_THREADS");
  if (env == nullptr || *env == '\0') return 0;  // let the library pick
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == nullptr || *end != '\0' || v < 1)
    throw DataError(std::string("RELERR_THREADS must be a positive integer, got '") + env + "'");
  return static_cast<unsigned>(v);
}

}  // namespace detail

struct FitOptions {
  std::string csv_path;
  std::string response;
  std::vector<std::string> features;  // empty and no lag: every other column
  std::optional<LagSpec> lag;
  double gamma = 0.5;
  LossKind loss = LossKind::kLpre;
  FitMode algorithm = FitMode::kMm;
  double ci_level = 0.95;
  bool no_intercept = false;
  std::string out_path;
  MmConfig mm;
};

struct FitOutcome {
  int exit_code = kExitOk;
  FitReport report;
};

// Fit a model from a CSV and write the report JSON.  Exit code 2 (with the
// report still written) signals non-convergence.
inline FitOutcome cmd_fit(const FitOptions& opt) {
  const CsvTable csv = read_csv(opt.csv_path);
  const LossFamily& fam = make_loss(opt.loss);

  std::vector<std::string> names;
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  bool intercept = false;
  if (opt.lag) {
    const std::vector<double> series = csv.numeric_column(opt.response);
    LagData lagged = make_lag_data(series, *opt.lag, false);
    x = lagged.data.X;
    y = lagged.data.y;
    for (int k = 1; k <= opt.lag->q; ++k) names.push_back("lag" + std::to_string(opt.lag->d * k));
  } else {
    std::vector<std::string> feats = opt.features;
    if (feats.empty()) {
      for (const auto& h : csv.header)
        if (h != opt.response) feats.push_back(h);
    }
    if (feats.empty()) throw SchemaError("cmd_fit: no feature columns");
    intercept = !opt.no_intercept;
    const std::size_t resp = csv.column_index(opt.response);
    std::vector<std::size_t> cols;
    for (const auto& f : feats) cols.push_back(csv.column_index(f));
    const auto n = static_cast<Eigen::Index>(csv.rows.size());
    if (n == 0) throw DataError("cmd_fit: CSV has no data rows");
    x.resize(n, static_cast<Eigen::Index>(cols.size()) + (intercept ? 1 : 0));
    y.resize(n);
    if (intercept) names.push_back("(intercept)");
    names.insert(names.end(), feats.begin(), feats.end());
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto row = static_cast<std::size_t>(i);
      y[i] = csv.numeric_cell(row, resp);
      Eigen::Index c = 0;
      if (intercept) x(i, c++) = 1.0;
      for (std::size_t f = 0; f < cols.size(); ++f) x(i, c++) = csv.numeric_cell(row, cols[f]);
    }
  }

  const Dataset data(std::move(x), std::move(y), intercept);
  const GammaObjective obj(fam, opt.gamma, data);
  MmConfig cfg = opt.mm;
  cfg.mode = opt.algorithm;
  const FitResult res = fit(obj, default_beta0(data), cfg);
  const SandwichCovariance sc = sandwich(fam, opt.gamma, data, res.beta_hat);
  const auto cis = confidence_intervals(sc, res.beta_hat, opt.ci_level);

  FitOutcome out;
  out.report.loss = to_string(opt.loss);
  out.report.gamma = opt.gamma;
  out.report.objective = res.objective;
  out.report.iterations = res.trace.iterations;
  out.report.converged = res.trace.converged;
  out.report.j_condition_number = sc.j_condition;
  out.report.ci_level = opt.ci_level;
  out.report.response = opt.response;
  out.report.intercept = intercept;
  for (Eigen::Index j = 0; j < res.beta_hat.size(); ++j) {
    CoefficientReport cr;
    cr.name = names[static_cast<std::size_t>(j)];
    cr.estimate = res.beta_hat[j];
    cr.std_error = std::sqrt(std::max(sc.cov(j, j), 0.0));
    cr.ci_low = cis[static_cast<std::size_t>(j)].first;
    cr.ci_high = cis[static_cast<std::size_t>(j)].second;
    out.report.coefficients.push_back(std::move(cr));
  }
  if (!opt.out_path.empty()) out.report.save(opt.out_path);
  out.exit_code = res.trace.converged ? kExitOk : kExitNotConverged;
  return out;
}

struct PredictOptions {
  std::string model_path;
  std::string csv_path;
  std::string out_path;
};

struct PredictOutcome {
  int exit_code = kExitOk;
  std::vector<double> predictions;
  std::optional<double> total_rpe;  // present when the response column exists
};

// Predict exp(x' beta) per row of a CSV against a saved model.  If the model's
// response column is present, per-row relative error terms and the total RPE
// are produced as well.
inline PredictOutcome cmd_predict(const PredictOptions& opt) {
  const FitReport report = FitReport::load(opt.model_path);
  const CsvTable csv = read_csv(opt.csv_path);

  std::vector<std::optional<std::size_t>> cols;  // nullopt = intercept
  for (const auto& c : report.coefficients) {
    if (c.name == "(intercept)")
      cols.push_back(std::nullopt);
    else
      cols.push_back(csv.column_index(c.name));
  }
  const bool have_y = !report.response.empty() && csv.has_column(report.response);
  const std::size_t y_col = have_y ? csv.column_index(report.response) : 0;

  PredictOutcome out;
  std::ostringstream body;
  body << (have_y ? "prediction,rel_err\n" : "prediction\n");
  double total = 0.0;
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    double xb = 0.0;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const double xv = cols[j] ? csv.numeric_cell(i, *cols[j]) : 1.0;
      xb += xv * report.coefficients[j].estimate;
    }
    const double pred = std::exp(xb);
    out.predictions.push_back(pred);
    if (have_y) {
      const double yv = csv.numeric_cell(i, y_col);
      if (!(yv > 0.0))
        throw DataError("cmd_predict: response must be positive at row " + std::to_string(i + 1));
      const double term = (yv - pred) * (yv - pred) / (yv * pred);
      total += term;
      body << format_double(pred) << "," << format_double(term) << "\n";
    } else {
      body << format_double(pred) << "\n";
    }
  }
  if (have_y) out.total_rpe = total;
  if (!opt.out_path.empty()) atomic_write(opt.out_path, body.str());
  return out;
}

struct GammaGridOptions {
  std::string csv_path;
  std::string response;
  LagSpec lag;  // window_n must be set
  std::vector<double> gammas;
  LossKind loss = LossKind::kLpre;
  FitMode algorithm = FitMode::kMm;
  std::string out_path;
  bool stratify_weekend = false;
  std::string timestamp_col;
  MmConfig mm;
};

struct GammaGridRow {
  double gamma = 0.0;
  double rpe = 0.0;
  double rpe_weekday = 0.0;
  double rpe_weekend = 0.0;
  double max_pred = 0.0;
  bool is_argmin = false;
};

struct GammaGridOutcome {
  int exit_code = kExitOk;
  std::vector<GammaGridRow> rows;
  double argmin_gamma = 0.0;
};

// Rolling-origin evaluation of a gamma grid on a lagged series: train on the
// window_n rows before each period-sized block, predict the block, accumulate
// relative errors over all blocks.
inline GammaGridOutcome cmd_gamma_grid(const GammaGridOptions& opt) {
  if (opt.gammas.empty()) throw DomainError("cmd_gamma_grid: gamma list is empty");
  if (opt.lag.window_n <= 0) throw DomainError("cmd_gamma_grid: lag window_n must be set");
  opt.lag.validate();
  if (opt.stratify_weekend && opt.timestamp_col.empty())
    throw SchemaError("cmd_gamma_grid: weekday/weekend split requires a timestamp column");

  const CsvTable csv = read_csv(opt.csv_path);
  const std::vector<double> series = csv.numeric_column(opt.response);
  const LagData lagged = make_lag_data(series, opt.lag, false);
  const Eigen::Index rows_total = lagged.data.n();
  const Eigen::Index window = opt.lag.window_n;
  if (rows_total <= window)
    throw InsufficientDataError("cmd_gamma_grid: need more than window_n = " +
                                std::to_string(window) + " usable rows, have " +
                                std::to_string(rows_total));

  std::vector<bool> weekend;
  if (opt.stratify_weekend) {
    const std::size_t ts = csv.column_index(opt.timestamp_col);
    weekend.resize(static_cast<std::size_t>(rows_total));
    for (Eigen::Index r = 0; r < rows_total; ++r) {
      const auto src = static_cast<std::size_t>(lagged.target_index[static_cast<std::size_t>(r)]);
      weekend[static_cast<std::size_t>(r)] = detail::is_weekend(csv.rows[src][ts]);
    }
  }

  const LossFamily& fam = make_loss(opt.loss);
  MmConfig cfg = opt.mm;
  cfg.mode = opt.algorithm;

  GammaGridOutcome out;
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_idx = 0;
  for (std::size_t k = 0; k < opt.gammas.size(); ++k) {
    GammaGridRow row;
    row.gamma = opt.gammas[k];
    for (Eigen::Index block = window; block < rows_total; block += opt.lag.d) {
      const Eigen::Index lo = block - window;
      const Dataset train(lagged.data.X.middleRows(lo, window), lagged.data.y.segment(lo, window),
                          false);
      const GammaObjective obj(fam, row.gamma, train);
      const FitResult res = fit(obj, default_beta0(train), cfg);
      const Eigen::Index hi = std::min<Eigen::Index>(block + opt.lag.d, rows_total);
      for (Eigen::Index r = block; r < hi; ++r) {
        const double pred = std::exp(lagged.data.X.row(r).dot(res.beta_hat));
        const double yv = lagged.data.y[r];
        const double term = (yv - pred) * (yv - pred) / (yv * pred);
        row.rpe += term;
        row.max_pred = std::max(row.max_pred, pred);
        if (opt.stratify_weekend) {
          if (weekend[static_cast<std::size_t>(r)])
            row.rpe_weekend += term;
          else
            row.rpe_weekday += term;
        }
      }
    }
    if (row.rpe < best) {
      best = row.rpe;
      best_idx = k;
    }
    out.rows.push_back(row);
  }
  out.rows[best_idx].is_argmin = true;
  out.argmin_gamma = out.rows[best_idx].gamma;

  if (!opt.out_path.empty()) {
    std::ostringstream body;
    body << (opt.stratify_weekend ? "gamma,rpe,rpe_weekday,rpe_weekend,max_pred,is_argmin\n"
                                  : "gamma,rpe,max_pred,is_argmin\n");
    for (const auto& r : out.rows) {
      body << format_double(r.gamma) << "," << format_double(r.rpe) << ",";
      if (opt.stratify_weekend)
        body << format_double(r.rpe_weekday) << "," << format_double(r.rpe_weekend) << ",";
      body << format_double(r.max_pred) << "," << (r.is_argmin ? 1 : 0) << "\n";
    }
    atomic_write(opt.out_path, body.str());
  }
  return out;
}

// Parse a scenario description whose keys mirror McScenario's fields.
inline McScenario parse_scenario(const nlohmann::json& j) {
  if (!j.is_object()) throw ScenarioError("scenario JSON must be an object");
  static const std::vector<std::string> known = {
      "model",      "beta0",      "n",          "rho",        "delta", "outlier_mu",
      "outlier_sigma", "gamma_grid", "loss",    "replicates", "seed",  "algorithm",
      "max_iter"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ScenarioError("scenario JSON has unknown field '" + it.key() + "'");
  }
  McScenario scn;
  try {
    const std::string model = j.value("model", std::string("MODEL1"));
    if (model == "MODEL1")
      scn.model = McModel::kModel1;
    else if (model == "MODEL2")
      scn.model = McModel::kModel2;
    else if (model == "CUSTOM")
      scn.model = McModel::kCustom;
    else
      throw ScenarioError("scenario: model must be MODEL1, MODEL2 or CUSTOM");
    if (j.contains("beta0")) {
      const auto v = j.at("beta0").get<std::vector<double>>();
      scn.beta0 = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    scn.n = j.value("n", scn.n);
    scn.rho = j.value("rho", scn.rho);
    scn.delta = j.value("delta", scn.delta);
    scn.outlier_mu = j.value("outlier_mu", scn.outlier_mu);
    scn.outlier_sigma = j.value("outlier_sigma", scn.outlier_sigma);
    if (j.contains("gamma_grid")) scn.gamma_grid = j.at("gamma_grid").get<std::vector<double>>();
    if (j.contains("loss")) scn.loss_kind = loss_kind_from_string(j.at("loss").get<std::string>());
    scn.replicates = j.value("replicates", scn.replicates);
    scn.seed = j.value("seed", scn.seed);
    if (j.contains("algorithm")) {
      const std::string a = j.at("algorithm").get<std::string>();
      if (a == "mm")
        scn.fit_config.mode = FitMode::kMm;
      else if (a == "hybrid")
        scn.fit_config.mode = FitMode::kHybrid;
      else if (a == "quasi_newton")
        scn.fit_config.mode = FitMode::kQuasiNewton;
      else
        throw ScenarioError("scenario: algorithm must be mm, hybrid or quasi_newton");
    }
    scn.fit_config.max_iter = j.value("max_iter", scn.fit_config.max_iter);
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("scenario JSON is malformed: ") + e.what());
  } catch (const DomainError& e) {
    throw ScenarioError(e.what());
  }
  scn.validate();
  return scn;
}

struct SimulateOptions {
  std::string scenario_path;
  std::string out_dir;
};

struct SimulateOutcome {
  int exit_code = kExitOk;
  McSummary summary;
};

// Run a Monte Carlo scenario and write summary.csv, summary.json and
// plot_data.csv into out_dir.  RELERR_THREADS caps worker threads; results do
// not depend on the thread count.
inline SimulateOutcome cmd_simulate(const SimulateOptions& opt) {
  std::ifstream in(opt.scenario_path);
  if (!in) throw FileError("cannot open '" + opt.scenario_path + "' for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError("scenario file is not valid JSON: " + std::string(e.what()));
  }
  const McScenario scn = parse_scenario(j);

  SimulateOutcome out;
  out.summary = run_monte_carlo(scn, detail::resolve_threads());

  const std::filesystem::path dir(opt.out_dir);
  std::filesystem::create_directories(dir);
  std::ostringstream csv_body, plot_body;
  out.summary.to_csv(csv_body);
  out.summary.to_plot_csv(plot_body);
  atomic_write(dir / "summary.csv", csv_body.str());
  atomic_write(dir / "plot_data.csv", plot_body.str());
  atomic_write(dir / "summary.json", out.summary.to_json().dump(2) + "\n");
  return out;
}

}  // namespace relerr

#endif  // RELERR_CLI_HPP
