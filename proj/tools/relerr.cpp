// Command-line front end: fit, predict, gamma-grid and simulate subcommands
// over the relerr library.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "relerr/cli.hpp"

namespace {

nlohmann::json effective_defaults() {
  const relerr::MmConfig mm;
  return nlohmann::json{
      {"fit",
       {{"gamma", 0.5},
        {"loss", "lpre"},
        {"algorithm", "mm"},
        {"level", 0.95},
        {"intercept", true},
        {"max_iter", mm.max_iter},
        {"tol_beta", mm.tol_beta},
        {"tol_obj", mm.tol_obj}}},
      {"gamma_grid", {{"loss", "lpre"}, {"algorithm", "mm"}, {"weekend_split", false}}},
      {"lag", {{"d", 96}, {"q", 5}}},
      {"simulate", {{"threads", "RELERR_THREADS, else hardware concurrency"}}}};
}

relerr::LossKind parse_loss(const std::string& s) { return relerr::loss_kind_from_string(s); }

relerr::FitMode parse_algorithm(const std::string& s) {
  if (s == "mm") return relerr::FitMode::kMm;
  if (s == "hybrid") return relerr::FitMode::kHybrid;
  if (s == "quasi_newton") return relerr::FitMode::kQuasiNewton;
  throw relerr::DomainError("unknown algorithm '" + s + "' (expected mm, hybrid or quasi_newton)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust regression for multiplicative (relative-error) models"};
  app.require_subcommand(0, 1);
  app.set_config("--config", "", "read option defaults from an INI file");
  bool show_config = false;
  app.add_flag("--show-config", show_config, "print effective defaults as JSON and exit");

  std::string csv_path, response, out_path, model_path, scenario_path, out_dir;
  std::string loss = "lpre", algorithm = "mm", timestamp_col;
  std::vector<std::string> features;
  std::vector<double> gammas;
  double gamma = 0.5, level = 0.95;
  int lag_d = 0, lag_q = 0, window = 0, max_iter = relerr::MmConfig{}.max_iter;
  bool no_intercept = false, weekend_split = false;

  CLI::App* fit = app.add_subcommand("fit", "fit a model from CSV and write a report JSON");
  fit->add_option("--csv", csv_path, "input CSV with a header row")->required();
  fit->add_option("--response", response, "response column (strictly positive)")->required();
  fit->add_option("--features", features, "feature columns (default: all other columns)")
      ->delimiter(',');
  fit->add_option("--lag-d", lag_d, "seasonal period; with --lag-q switches to lag features");
  fit->add_option("--lag-q", lag_q, "number of seasonal lags");
  fit->add_option("--gamma", gamma, "robustness parameter (0 = maximum likelihood)");
  fit->add_option("--loss", loss, "loss family: lpre or lsre");
  fit->add_option("--algorithm", algorithm, "mm, hybrid or quasi_newton");
  fit->add_option("--level", level, "confidence level for intervals");
  fit->add_flag("--no-intercept", no_intercept, "do not prepend an intercept column");
  fit->add_option("--max-iter", max_iter, "outer iteration budget");
  fit->add_option("--out", out_path, "path for the report JSON");

  CLI::App* predict = app.add_subcommand("predict", "predict exp(x' beta) for CSV rows");
  predict->add_option("--model", model_path, "model JSON from fit")->required();
  predict->add_option("--csv", csv_path, "input CSV")->required();
  predict->add_option("--out", out_path, "path for the predictions CSV")->required();

  CLI::App* grid = app.add_subcommand(
      "gamma-grid", "rolling-origin relative prediction error over a gamma grid");
  grid->add_option("--csv", csv_path, "input CSV")->required();
  grid->add_option("--response", response, "series column")->required();
  grid->add_option("--lag-d", lag_d, "seasonal period")->required();
  grid->add_option("--lag-q", lag_q, "number of seasonal lags")->required();
  grid->add_option("--window", window, "training window in usable rows")->required();
  grid->add_option("--gammas", gammas, "gamma values, comma separated")
      ->delimiter(',')
      ->required();
  grid->add_option("--loss", loss, "loss family: lpre or lsre");
  grid->add_option("--algorithm", algorithm, "mm, hybrid or quasi_newton");
  grid->add_option("--max-iter", max_iter, "outer iteration budget per fit");
  grid->add_flag("--weekend-split", weekend_split, "also report weekday/weekend error separately");
  grid->add_option("--timestamp-col", timestamp_col, "ISO-8601 timestamp column for the split");
  grid->add_option("--out", out_path, "path for the grid CSV");

  CLI::App* simulate = app.add_subcommand("simulate", "run a Monte Carlo scenario");
  simulate->add_option("--scenario", scenario_path, "scenario JSON")->required();
  simulate->add_option("--out-dir", out_dir, "directory for summary/plot files")->required();

  CLI11_PARSE(app, argc, argv);

  if (show_config) {
    std::cout << effective_defaults().dump(2) << "\n";
    return relerr::kExitOk;
  }
  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return relerr::kExitOk;
  }

  try {
    if (fit->parsed()) {
      relerr::FitOptions opt;
      opt.csv_path = csv_path;
      opt.response = response;
      opt.features = features;
      if (lag_d > 0 || lag_q > 0) opt.lag = relerr::LagSpec{lag_d, lag_q, 0};
      opt.gamma = gamma;
      opt.loss = parse_loss(loss);
      opt.algorithm = parse_algorithm(algorithm);
      opt.ci_level = level;
      opt.no_intercept = no_intercept;
      opt.out_path = out_path;
      opt.mm.max_iter = max_iter;
      const relerr::FitOutcome res = relerr::cmd_fit(opt);
      for (const auto& c : res.report.coefficients)
        std::cout << c.name << " " << relerr::format_double(c.estimate) << " (se "
                  << relerr::format_double(c.std_error) << ")\n";
      std::cout << (res.report.converged ? "converged" : "NOT converged") << " after "
                << res.report.iterations << " iterations, objective "
                << relerr::format_double(res.report.objective) << "\n";
      return res.exit_code;
    }
    if (predict->parsed()) {
      const relerr::PredictOutcome res =
          relerr::cmd_predict({model_path, csv_path, out_path});
      std::cout << res.predictions.size() << " predictions written to " << out_path << "\n";
      if (res.total_rpe)
        std::cout << "total_rpe " << relerr::format_double(*res.total_rpe) << "\n";
      return res.exit_code;
    }
    if (grid->parsed()) {
      relerr::GammaGridOptions opt;
      opt.csv_path = csv_path;
      opt.response = response;
      opt.lag = relerr::LagSpec{lag_d, lag_q, window};
      opt.gammas = gammas;
      opt.loss = parse_loss(loss);
      opt.algorithm = parse_algorithm(algorithm);
      opt.out_path = out_path;
      opt.stratify_weekend = weekend_split;
      opt.timestamp_col = timestamp_col;
      opt.mm.max_iter = max_iter;
      const relerr::GammaGridOutcome res = relerr::cmd_gamma_grid(opt);
      std::cout << "argmin gamma " << relerr::format_double(res.argmin_gamma) << "\n";
      return res.exit_code;
    }
    if (simulate->parsed()) {
      const relerr::SimulateOutcome res = relerr::cmd_simulate({scenario_path, out_dir});
      std::cout << "simulated " << res.summary.replicates << " replicates over "
                << res.summary.cells.size() << " gamma values into " << out_dir << "\n";
      return res.exit_code;
    }
  } catch (const relerr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return relerr::kExitInputError;
  }
  return relerr::kExitOk;
}
