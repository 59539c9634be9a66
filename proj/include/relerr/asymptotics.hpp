#ifndef RELERR_ASYMPTOTICS_HPP
#define RELERR_ASYMPTOTICS_HPP

#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "relerr/data.hpp"
#include "relerr/errors.hpp"
#include "relerr/linalg.hpp"
#include "relerr/loss.hpp"
#include "relerr/quadrature.hpp"
#include "relerr/util.hpp"

namespace relerr {

// Scalar functionals of the noise density entering the asymptotic covariance:
//   c       = int h^{1+gamma}
//   c1      = int eps h^gamma h' d eps
//   c2      = int u_h^2 h^{2 gamma + 1} d eps
//   c2_half = c2 evaluated at gamma / 2, i.e. int u_h^2 h^{gamma + 1} d eps
// As gamma -> 0, c -> 1 and c1 -> -1.
struct NoiseConstants {
  double c = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c2_half = 0.0;
  double gamma = 0.0;
};

namespace detail {

inline NoiseConstants compute_noise_constants(const LossFamily& fam, double gamma,
                                              const QuadratureSpec& spec) {
  auto log_h = [&fam](double eps) {
    return fam.log_norm_const - std::log(eps) - fam.rho_saturated(eps);
  };
  auto h_pow = [&log_h](double eps, double alpha) {
    const double le = alpha * log_h(eps);
    return le < -745.0 ? 0.0 : std::exp(le);
  };
  NoiseConstants nc;
  nc.gamma = gamma;
  nc.c = integrate_positive_halfline([&](double e) { return h_pow(e, 1.0 + gamma); }, spec);
  // eps h^gamma h' = -h^{gamma+1} (1 + eps rho'(eps)), using h' = -h (1/eps + rho').
  nc.c1 = integrate_positive_halfline(
      [&](double e) {
        const double w = h_pow(e, 1.0 + gamma);
        return w == 0.0 ? 0.0 : -w * (1.0 + e * fam.rho_prime(e));
      },
      spec);
  auto c2_at = [&](double g) {
    return integrate_positive_halfline(
        [&](double e) {
          const double w = h_pow(e, 2.0 * g + 1.0);
          if (w == 0.0) return 0.0;
          const double u = -e * fam.rho_prime(e);
          return u * u * w;
        },
        spec);
  };
  nc.c2 = c2_at(gamma);
  nc.c2_half = c2_at(0.5 * gamma);
  return nc;
}

}  // namespace detail

// Cached per (family name, gamma); the integrals are pure so any thread may
// fill the cache.
inline NoiseConstants noise_constants(const LossFamily& fam, double gamma,
                                      const QuadratureSpec& spec = {}) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw DomainError("noise_constants: gamma must be >= 0");
  static std::mutex mu;
  static std::map<std::pair<std::string, double>, NoiseConstants> cache;
  const auto key = std::make_pair(fam.name, gamma);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const NoiseConstants nc = detail::compute_noise_constants(fam, gamma, spec);
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(key, nc).first->second;
}

// Empirical moments pi_k = (1/n) sum_i x_i^{(k)} exp(-gamma_scale * x_i' beta)
// for k = 0, 1, 2, with max-subtraction in the exponent.
struct PiMoments {
  double pi0 = 0.0;
  Eigen::VectorXd pi1;
  Eigen::MatrixXd pi2;
  double gamma_scale = 0.0;
};

inline PiMoments pi_moments(const Dataset& data, const Coefficients& beta, double gamma_scale) {
  if (beta.size() != data.p()) throw DimensionError("pi_moments: beta size mismatch");
  const Eigen::Index n = data.n(), p = data.p();
  const Eigen::VectorXd theta = -gamma_scale * (data.X * beta);
  const double m = theta.maxCoeff();
  if (m > 700.0)
    throw OverflowError("pi_moments: exponent " + std::to_string(m) +
                        " exceeds the log-domain bound 700");
  PiMoments pm;
  pm.gamma_scale = gamma_scale;
  pm.pi1 = Eigen::VectorXd::Zero(p);
  pm.pi2 = Eigen::MatrixXd::Zero(p, p);
  double s0 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = std::exp(theta[i] - m);
    s0 += w;
    pm.pi1 += w * data.X.row(i).transpose();
    pm.pi2 += w * data.X.row(i).transpose() * data.X.row(i);
  }
  const double scale = std::exp(m) / static_cast<double>(n);
  pm.pi0 = scale * s0;
  pm.pi1 *= scale;
  pm.pi2 *= scale;
  pm.pi2 = 0.5 * (pm.pi2 + pm.pi2.transpose()).eval();
  return pm;
}

// Plug-in sandwich covariance of the gamma-likelihood estimator,
// cov = J^{-1} Delta J^{-1} / n.
struct SandwichCovariance {
  Eigen::MatrixXd delta;
  Eigen::MatrixXd j;
  Eigen::MatrixXd cov;
  double h_prime = 0.0;       // C(gamma,h) * pi0(gamma)
  Eigen::VectorXd h_dprime;   // -(C + C1) * pi1(gamma)
  double j_condition = 0.0;
  bool diag_clipped = false;
};

inline SandwichCovariance sandwich(const LossFamily& fam, double gamma, const Dataset& data,
                                   const Coefficients& beta_hat, const QuadratureSpec& spec = {}) {
  const NoiseConstants nc = noise_constants(fam, gamma, spec);
  const NoiseConstants nc2 = noise_constants(fam, 2.0 * gamma, spec);
  const PiMoments pm = pi_moments(data, beta_hat, gamma);
  const PiMoments pm2 = pi_moments(data, beta_hat, 2.0 * gamma);
  const double a = nc.c + nc.c1;

  SandwichCovariance sc;
  // The rank-one cross term of Delta is stored as -(M + M') so the assembled
  // matrix is symmetric in finite samples, not merely in the population limit.
  const Eigen::MatrixXd m_cross =
      nc.c * a * (nc2.c + nc2.c1) * pm.pi0 * (pm2.pi1 * pm.pi1.transpose());
  sc.delta = nc.c * nc.c * nc.c2 * pm.pi0 * pm.pi0 * pm2.pi2 +
             a * a * nc2.c * pm2.pi0 * (pm.pi1 * pm.pi1.transpose()) -
             (m_cross + m_cross.transpose());
  sc.j = nc.c * nc.c2_half * pm.pi0 * pm.pi2 - a * a * (pm.pi1 * pm.pi1.transpose());
  sc.delta = 0.5 * (sc.delta + sc.delta.transpose()).eval();
  sc.j = 0.5 * (sc.j + sc.j.transpose()).eval();

  SymmetricInverse ji;
  try {
    ji = invert_symmetric(sc.j);
  } catch (const SingularMatrixError&) {
    throw SingularMatrixError("sandwich: J is singular or too ill-conditioned to invert");
  }
  sc.j_condition = ji.condition;
  sc.cov = (ji.inverse * sc.delta * ji.inverse) / static_cast<double>(data.n());
  sc.cov = 0.5 * (sc.cov + sc.cov.transpose()).eval();
  for (Eigen::Index k = 0; k < sc.cov.rows(); ++k) {
    if (sc.cov(k, k) < 0.0) {
      sc.cov(k, k) = 0.0;
      sc.diag_clipped = true;
    }
  }
  sc.h_prime = nc.c * pm.pi0;
  sc.h_dprime = -a * pm.pi1;
  return sc;
}

// Wald intervals beta_j -/+ z_{(1+level)/2} sqrt(cov_jj).
inline std::vector<std::pair<double, double>> confidence_intervals(const SandwichCovariance& sc,
                                                                   const Coefficients& beta_hat,
                                                                   double level) {
  if (!(level >= 0.0) || !(level < 1.0))
    throw DomainError("confidence_intervals: level must lie in [0, 1)");
  const double z = level == 0.0 ? 0.0 : normal_quantile(0.5 * (1.0 + level));
  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<std::size_t>(beta_hat.size()));
  for (Eigen::Index j = 0; j < beta_hat.size(); ++j) {
    const double half = z * std::sqrt(std::max(sc.cov(j, j), 0.0));
    out.emplace_back(beta_hat[j] - half, beta_hat[j] + half);
  }
  return out;
}

// Standardised deviations (beta_hat_j - beta_true_j) / sqrt(cov_jj); the 1/n
// factor is already folded into cov.
inline Eigen::VectorXd z_scores(const SandwichCovariance& sc, const Coefficients& beta_hat,
                                const Coefficients& beta_true) {
  if (beta_hat.size() != beta_true.size()) throw DimensionError("z_scores: size mismatch");
  Eigen::VectorXd z(beta_hat.size());
  for (Eigen::Index j = 0; j < beta_hat.size(); ++j) {
    const double d = beta_hat[j] - beta_true[j];
    z[j] = d == 0.0 ? 0.0 : d / std::sqrt(sc.cov(j, j));
  }
  return z;
}

}  // namespace relerr

#endif  // RELERR_ASYMPTOTICS_HPP
