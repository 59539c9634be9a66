#ifndef RELERR_SIMULATION_HPP
#define RELERR_SIMULATION_HPP

#include <atomic>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "relerr/asymptotics.hpp"
#include "relerr/data.hpp"
#include "relerr/errors.hpp"
#include "relerr/estimator.hpp"
#include "relerr/loss.hpp"
#include "relerr/objective.hpp"
#include "relerr/rng.hpp"
#include "relerr/sampling.hpp"
#include "relerr/util.hpp"

namespace relerr {

enum class McModel { kModel1, kModel2, kCustom };

inline std::string to_string(McModel m) {
  switch (m) {
    case McModel::kModel1: return "MODEL1";
    case McModel::kModel2: return "MODEL2";
    default: return "CUSTOM";
  }
}

// Monte Carlo scenario: equicorrelated Gaussian predictors, multiplicative
// noise from the loss family's density, and a delta-fraction of lognormal
// outliers replacing clean responses.
struct McScenario {
  McModel model = McModel::kModel1;
  Coefficients beta0;  // used when model == kCustom; derived otherwise
  int n = 200;
  double rho = 0.0;
  double delta = 0.0;
  double outlier_mu = 5.0;
  double outlier_sigma = 1.0;
  std::vector<double> gamma_grid = {0.0, 0.5};
  LossKind loss_kind = LossKind::kLpre;
  int replicates = 500;
  std::uint64_t seed = 1;
  MmConfig fit_config;

  Coefficients resolved_beta0() const {
    switch (model) {
      case McModel::kModel1: {
        return Coefficients::Ones(3);
      }
      case McModel::kModel2: {
        Coefficients b = Coefficients::Zero(51);
        b.head(6).setConstant(0.5);
        return b;
      }
      default:
        return beta0;
    }
  }

  void validate() const {
    if (model == McModel::kCustom && beta0.size() == 0)
      throw ScenarioError("McScenario: CUSTOM model requires beta0");
    if (n < resolved_beta0().size())
      throw ScenarioError("McScenario: n must be >= number of coefficients");
    if (!(rho >= 0.0) || !(rho < 1.0)) throw ScenarioError("McScenario: rho must lie in [0, 1)");
    if (!(delta >= 0.0) || !(delta < 1.0))
      throw ScenarioError("McScenario: delta must lie in [0, 1)");
    if (!(outlier_sigma > 0.0)) throw ScenarioError("McScenario: outlier_sigma must be positive");
    if (gamma_grid.empty()) throw ScenarioError("McScenario: gamma_grid must be non-empty");
    for (double g : gamma_grid)
      if (!(g >= 0.0) || !std::isfinite(g))
        throw ScenarioError("McScenario: gamma values must be finite and >= 0");
    if (replicates < 1) throw ScenarioError("McScenario: replicates must be >= 1");
    fit_config.validate();
  }
};

// Per-gamma aggregates over replicates.
struct McCell {
  double gamma = 0.0;
  double rpe_p25 = 0.0, rpe_p50 = 0.0, rpe_p75 = 0.0;
  double mse_p25 = 0.0, mse_p50 = 0.0, mse_p75 = 0.0;
  std::vector<std::vector<double>> z;  // z[j] = samples for coefficient j
  std::vector<double> z_mean, z_sd, coverage;
  int failures = 0;        // fit-level failures (exception or non-finite beta)
  int z_failures = 0;      // sandwich failures on otherwise good fits
  int non_converged = 0;   // fits that hit the iteration budget
  int successes = 0;
};

struct McSummary {
  std::string model;
  int n = 0;
  double rho = 0.0, delta = 0.0, outlier_mu = 0.0, outlier_sigma = 0.0;
  std::string loss;
  int replicates = 0;
  std::uint64_t seed = 0;
  double outlier_fraction = 0.0;
  std::vector<McCell> cells;

  void to_csv(std::ostream& os) const {
    os << "gamma,metric,stat,value\n";
    for (const auto& c : cells) {
      const std::string g = format_double(c.gamma);
      os << g << ",rpe,p25," << format_double(c.rpe_p25) << "\n";
      os << g << ",rpe,p50," << format_double(c.rpe_p50) << "\n";
      os << g << ",rpe,p75," << format_double(c.rpe_p75) << "\n";
      os << g << ",mse,p25," << format_double(c.mse_p25) << "\n";
      os << g << ",mse,p50," << format_double(c.mse_p50) << "\n";
      os << g << ",mse,p75," << format_double(c.mse_p75) << "\n";
      for (std::size_t j = 0; j < c.z_mean.size(); ++j) {
        const std::string cj = std::to_string(j + 1);
        os << g << ",z_mean,coef" << cj << "," << format_double(c.z_mean[j]) << "\n";
        os << g << ",z_sd,coef" << cj << "," << format_double(c.z_sd[j]) << "\n";
        os << g << ",coverage,coef" << cj << "," << format_double(c.coverage[j]) << "\n";
      }
      os << g << ",failures,count," << c.failures << "\n";
      os << g << ",z_failures,count," << c.z_failures << "\n";
      os << g << ",non_converged,count," << c.non_converged << "\n";
      os << g << ",successes,count," << c.successes << "\n";
    }
  }

  // Tidy per-(gamma, metric) rows for external plotting.
  void to_plot_csv(std::ostream& os) const {
    os << "gamma,delta,metric,p25,p50,p75\n";
    for (const auto& c : cells) {
      os << format_double(c.gamma) << "," << format_double(delta) << ",rpe,"
         << format_double(c.rpe_p25) << "," << format_double(c.rpe_p50) << ","
         << format_double(c.rpe_p75) << "\n";
      os << format_double(c.gamma) << "," << format_double(delta) << ",mse,"
         << format_double(c.mse_p25) << "," << format_double(c.mse_p50) << ","
         << format_double(c.mse_p75) << "\n";
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json cells_json = nlohmann::json::array();
    for (const auto& c : cells) {
      nlohmann::json jc;
      jc["gamma"] = c.gamma;
      jc["rpe"] = {{"p25", c.rpe_p25}, {"p50", c.rpe_p50}, {"p75", c.rpe_p75}};
      jc["mse"] = {{"p25", c.mse_p25}, {"p50", c.mse_p50}, {"p75", c.mse_p75}};
      jc["z"] = {{"mean", c.z_mean}, {"sd", c.z_sd}, {"coverage", c.coverage}};
      jc["failures"] = c.failures;
      jc["z_failures"] = c.z_failures;
      jc["non_converged"] = c.non_converged;
      jc["successes"] = c.successes;
      cells_json.push_back(jc);
    }
    return nlohmann::json{{"model", model},
                          {"n", n},
                          {"rho", rho},
                          {"delta", delta},
                          {"outlier_mu", outlier_mu},
                          {"outlier_sigma", outlier_sigma},
                          {"loss", loss},
                          {"replicates", replicates},
                          {"seed", seed},
                          {"outlier_fraction", outlier_fraction},
                          {"cells", cells_json}};
  }
};

// Rows i.i.d. N(0, (1-rho) I + rho 11'), sampled as sqrt(1-rho) z + sqrt(rho) w 1
// with one shared w per row.  Draw order per row: w first, then z_1..z_p.
inline Eigen::MatrixXd generate_predictors(const McScenario& scn, RngStream& rng) {
  const Eigen::Index p = scn.resolved_beta0().size();
  Eigen::MatrixXd x(scn.n, p);
  const double a = std::sqrt(1.0 - scn.rho), b = std::sqrt(scn.rho);
  for (int i = 0; i < scn.n; ++i) {
    const double w = rng.normal();
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = a * rng.normal() + b * w;
  }
  return x;
}

// Contaminated responses: with probability delta, y ~ LogNormal(mu, sigma)
// independent of x; otherwise y = exp(x' beta0) eps with eps from the family's
// noise density.  One uniform per row decides the branch.
inline Eigen::VectorXd generate_responses(const McScenario& scn, const Eigen::MatrixXd& x,
                                          const LossFamily& fam, RngStream& rng,
                                          int* outlier_count = nullptr) {
  const Coefficients beta0 = scn.resolved_beta0();
  if (x.cols() != beta0.size()) throw DimensionError("generate_responses: X/beta0 mismatch");
  Eigen::VectorXd y(x.rows());
  int outliers = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (rng.uniform01() < scn.delta) {
      y[i] = rng.lognormal(scn.outlier_mu, scn.outlier_sigma);
      ++outliers;
    } else {
      y[i] = std::exp(x.row(i).dot(beta0)) * sample_noise(fam, rng);
    }
  }
  if (outlier_count) *outlier_count = outliers;
  return y;
}

// Relative prediction error sum_i (y_i - t_i)^2 / (y_i t_i), t = exp(X beta).
inline double rpe(const Coefficients& beta_hat, const Eigen::MatrixXd& x_new,
                  const Eigen::VectorXd& y_new) {
  if (x_new.cols() != beta_hat.size()) throw DimensionError("rpe: X/beta mismatch");
  if (y_new.size() != x_new.rows()) throw DimensionError("rpe: X/y mismatch");
  double s = 0.0;
  for (Eigen::Index i = 0; i < y_new.size(); ++i) {
    if (!(y_new[i] > 0.0)) throw DomainError("rpe: y_new must be positive");
    const double t = std::exp(x_new.row(i).dot(beta_hat));
    const double d = y_new[i] - t;
    s += d * d / (y_new[i] * t);
  }
  return s;
}

inline double mse(const Coefficients& beta_hat, const Coefficients& beta_true) {
  if (beta_hat.size() != beta_true.size()) throw DimensionError("mse: size mismatch");
  return (beta_hat - beta_true).squaredNorm();
}

namespace detail {

struct CellSample {
  bool fit_ok = false;
  bool have_z = false;
  bool converged = false;
  double rpe = 0.0;
  double mse = 0.0;
  Eigen::VectorXd z;
};

struct ReplicateResult {
  std::vector<CellSample> cells;  // one per gamma, grid order
  int outliers = 0;
};

inline ReplicateResult run_replicate(const McScenario& scn, const LossFamily& fam,
                                     const Coefficients& beta0, std::uint64_t replicate) {
  ReplicateResult rep;
  RngStream rng(scn.seed, replicate + 1);
  const Eigen::MatrixXd x = generate_predictors(scn, rng);
  const Eigen::VectorXd y = generate_responses(scn, x, fam, rng, &rep.outliers);
  Eigen::VectorXd y_new(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    y_new[i] = std::exp(x.row(i).dot(beta0)) * sample_noise(fam, rng);

  const Dataset data(x, y, false);
  rep.cells.resize(scn.gamma_grid.size());
  for (std::size_t k = 0; k < scn.gamma_grid.size(); ++k) {
    CellSample& cell = rep.cells[k];
    try {
      const GammaObjective obj(fam, scn.gamma_grid[k], data);
      const FitResult r = fit(obj, default_beta0(data), scn.fit_config);
      if (!r.beta_hat.allFinite()) continue;
      cell.fit_ok = true;
      cell.converged = r.trace.converged;
      cell.rpe = rpe(r.beta_hat, x, y_new);
      cell.mse = mse(r.beta_hat, beta0);
      try {
        const SandwichCovariance sc = sandwich(fam, scn.gamma_grid[k], data, r.beta_hat);
        cell.z = z_scores(sc, r.beta_hat, beta0);
        cell.have_z = cell.z.allFinite();
      } catch (const Error&) {
        cell.have_z = false;
      }
    } catch (const Error&) {
      cell.fit_ok = false;
    }
  }
  return rep;
}

}  // namespace detail

// Run the scenario's replicates (in parallel up to max_threads; 0 means the
// hardware count) and aggregate.  Replicate t always uses stream_id t+1 and
// the fold over replicates is in index order, so the summary is bit-identical
// for any thread count.
inline McSummary run_monte_carlo(const McScenario& scn, unsigned max_threads = 0) {
  scn.validate();
  const LossFamily& fam = make_loss(scn.loss_kind);
  const Coefficients beta0 = scn.resolved_beta0();
  const auto p = static_cast<std::size_t>(beta0.size());
  const int t_total = scn.replicates;

  // Touch shared caches once before going parallel.
  for (double g : scn.gamma_grid) {
    noise_constants(fam, g);
    noise_constants(fam, 2.0 * g);
  }
  {
    RngStream warm(scn.seed, 0);
    sample_noise(fam, warm);
  }

  std::vector<detail::ReplicateResult> results(t_total);
  unsigned threads = max_threads == 0 ? std::thread::hardware_concurrency() : max_threads;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(t_total)));
  if (threads == 1) {
    for (int t = 0; t < t_total; ++t)
      results[t] = detail::run_replicate(scn, fam, beta0, static_cast<std::uint64_t>(t));
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (int t = next.fetch_add(1); t < t_total; t = next.fetch_add(1))
          results[t] = detail::run_replicate(scn, fam, beta0, static_cast<std::uint64_t>(t));
      });
    }
    for (auto& th : pool) th.join();
  }

  McSummary sum;
  sum.model = to_string(scn.model);
  sum.n = scn.n;
  sum.rho = scn.rho;
  sum.delta = scn.delta;
  sum.outlier_mu = scn.outlier_mu;
  sum.outlier_sigma = scn.outlier_sigma;
  sum.loss = to_string(scn.loss_kind);
  sum.replicates = t_total;
  sum.seed = scn.seed;

  long outlier_draws = 0;
  for (const auto& rep : results) outlier_draws += rep.outliers;
  sum.outlier_fraction =
      static_cast<double>(outlier_draws) / (static_cast<double>(t_total) * scn.n);

  const double z975 = normal_quantile(0.975);
  for (std::size_t k = 0; k < scn.gamma_grid.size(); ++k) {
    McCell cell;
    cell.gamma = scn.gamma_grid[k];
    std::vector<double> rpes, mses;
    cell.z.assign(p, {});
    for (const auto& rep : results) {
      const detail::CellSample& cs = rep.cells[k];
      if (!cs.fit_ok) {
        ++cell.failures;
        continue;
      }
      ++cell.successes;
      if (!cs.converged) ++cell.non_converged;
      rpes.push_back(cs.rpe);
      mses.push_back(cs.mse);
      if (cs.have_z) {
        for (std::size_t j = 0; j < p; ++j) cell.z[j].push_back(cs.z[static_cast<Eigen::Index>(j)]);
      } else {
        ++cell.z_failures;
      }
    }
    if (cell.failures > t_total / 5)
      throw Error("run_monte_carlo: fit failure rate above 20% at gamma = " +
                  format_double(cell.gamma));
    if (!rpes.empty()) {
      cell.rpe_p25 = percentile(rpes, 0.25);
      cell.rpe_p50 = percentile(rpes, 0.50);
      cell.rpe_p75 = percentile(rpes, 0.75);
      cell.mse_p25 = percentile(mses, 0.25);
      cell.mse_p50 = percentile(mses, 0.50);
      cell.mse_p75 = percentile(mses, 0.75);
    }
    cell.z_mean.resize(p);
    cell.z_sd.resize(p);
    cell.coverage.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
      cell.z_mean[j] = mean_of(cell.z[j]);
      cell.z_sd[j] = sd_of(cell.z[j]);
      long covered = 0;
      for (double zv : cell.z[j])
        if (std::abs(zv) <= z975) ++covered;
      cell.coverage[j] =
          cell.z[j].empty() ? std::numeric_limits<double>::quiet_NaN()
                            : static_cast<double>(covered) / static_cast<double>(cell.z[j].size());
    }
    sum.cells.push_back(std::move(cell));
  }
  return sum;
}

}  // namespace relerr

#endif  // RELERR_SIMULATION_HPP
