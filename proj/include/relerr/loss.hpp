#ifndef RELERR_LOSS_HPP
#define RELERR_LOSS_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "relerr/data.hpp"
#include "relerr/errors.hpp"
#include "relerr/quadrature.hpp"

namespace relerr {

enum class LossKind { kLpre, kLsre, kCustom };

inline std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kLpre: return "lpre";
    case LossKind::kLsre: return "lsre";
    default: return "custom";
  }
}

inline LossKind loss_kind_from_string(const std::string& s) {
  if (s == "lpre") return LossKind::kLpre;
  if (s == "lsre") return LossKind::kLsre;
  throw DomainError("unknown loss family '" + s + "' (expected lpre or lsre)");
}

// A general relative-error criterion g(|1 - t/y|, |1 - y/t|) restricted to the
// multiplicative model, carried around as its profile rho(eps) = g evaluated at
// eps = y/t, together with the normalising constant of the induced noise
// density h(eps) = C / eps * exp(-rho(eps)) on (0, inf).
struct LossFamily {
  LossKind kind = LossKind::kCustom;
  std::string name;
  std::function<double(double, double)> g;
  std::function<double(double)> rho;
  std::function<double(double)> rho_prime;
  std::function<double(double)> rho_second;
  double norm_const = 0.0;
  double log_norm_const = 0.0;

  // rho clamped into the finite range; extreme ratios saturate instead of
  // producing inf/NaN so log-densities stay well defined everywhere.
  double rho_saturated(double eps) const {
    if (!(eps > 0.0)) return std::numeric_limits<double>::max();
    const double capped = std::min(eps, 8.2e307);
    const double v = rho(capped);
    if (!std::isfinite(v)) return std::numeric_limits<double>::max();
    return v;
  }
};

namespace detail {

inline double noise_mass(const LossFamily& fam, const QuadratureSpec& spec) {
  auto integrand = [&fam](double eps) { return std::exp(-std::log(eps) - fam.rho_saturated(eps)); };
  return integrate_positive_halfline(integrand, spec);
}

inline LossFamily finalize_family(LossFamily fam, const QuadratureSpec& spec) {
  const double mass = detail::noise_mass(fam, spec);
  if (!(mass > 0.0) || !std::isfinite(mass))
    throw NonFiniteError("loss family '" + fam.name + "': noise density does not normalise");
  fam.norm_const = 1.0 / mass;
  fam.log_norm_const = -std::log(mass);
  return fam;
}

}  // namespace detail

// Built-in families.  LPRE sums the product of the two relative errors, LSRE
// the sum of their squares; both profiles satisfy rho(eps) = rho(1/eps).
inline const LossFamily& make_loss(LossKind kind) {
  static const LossFamily lpre = detail::finalize_family(
      LossFamily{LossKind::kLpre, "lpre", [](double a, double b) { return a * b; },
                 [](double e) { return e + 1.0 / e - 2.0; },
                 [](double e) { return 1.0 - 1.0 / (e * e); },
                 [](double e) { return 2.0 / (e * e * e); }, 0.0, 0.0},
      QuadratureSpec{});
  static const LossFamily lsre = detail::finalize_family(
      LossFamily{LossKind::kLsre, "lsre", [](double a, double b) { return a * a + b * b; },
                 [](double e) {
                   const double u = 1.0 - 1.0 / e, v = 1.0 - e;
                   return u * u + v * v;
                 },
                 [](double e) { return 2.0 / (e * e) - 2.0 / (e * e * e) - 2.0 + 2.0 * e; },
                 [](double e) {
                   const double e2 = e * e;
                   return -4.0 / (e2 * e) + 6.0 / (e2 * e2) + 2.0;
                 },
                 0.0, 0.0},
      QuadratureSpec{});
  switch (kind) {
    case LossKind::kLpre: return lpre;
    case LossKind::kLsre: return lsre;
    default: throw DomainError("make_loss: custom families must use make_custom_loss");
  }
}

// Register a user-supplied criterion.  The tuple is validated on a grid before
// the normalising constant is computed: g must be symmetric, rho must match
// g(|1 - 1/eps|, |1 - eps|), vanish at 1 and satisfy rho(eps) = rho(1/eps).
inline LossFamily make_custom_loss(std::string name, std::function<double(double, double)> g,
                                   std::function<double(double)> rho,
                                   std::function<double(double)> rho_prime,
                                   std::function<double(double)> rho_second,
                                   const QuadratureSpec& spec = {}) {
  if (!g || !rho || !rho_prime || !rho_second)
    throw DomainError("make_custom_loss: all callables must be set");
  if (std::abs(rho(1.0)) > 1e-12)
    throw DomainError("make_custom_loss: rho(1) must be 0");
  for (double e : {0.05, 0.2, 0.5, 0.8, 1.25, 2.0, 5.0, 20.0}) {
    const double r = rho(e);
    const double tol = 1e-10 * (1.0 + std::abs(r));
    if (std::abs(r - rho(1.0 / e)) > tol)
      throw DomainError("make_custom_loss: rho(eps) != rho(1/eps) at eps = " + std::to_string(e));
    if (std::abs(r - g(std::abs(1.0 - 1.0 / e), std::abs(1.0 - e))) > tol)
      throw DomainError("make_custom_loss: rho does not match g at eps = " + std::to_string(e));
    const double a = std::abs(1.0 - 1.0 / e), b = std::abs(1.0 - e);
    if (std::abs(g(a, b) - g(b, a)) > 1e-12 * (1.0 + std::abs(g(a, b))))
      throw DomainError("make_custom_loss: g is not symmetric at eps = " + std::to_string(e));
    const double h = 1e-6 * e;
    const double fd = (rho(e + h) - rho(e - h)) / (2.0 * h);
    if (std::abs(fd - rho_prime(e)) > 1e-4 * (1.0 + std::abs(fd)))
      throw DomainError("make_custom_loss: rho_prime inconsistent with rho at eps = " +
                        std::to_string(e));
  }
  LossFamily fam{LossKind::kCustom, std::move(name), std::move(g), std::move(rho),
                 std::move(rho_prime), std::move(rho_second), 0.0, 0.0};
  return detail::finalize_family(std::move(fam), spec);
}

// Noise density h(eps) = C / eps * exp(-rho(eps)) on (0, inf).
inline double noise_density(const LossFamily& fam, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("noise_density: eps must be positive");
  return std::exp(fam.log_norm_const - std::log(eps) - fam.rho_saturated(eps));
}

inline double log_noise_density(const LossFamily& fam, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps))
    throw DomainError("log_noise_density: eps must be positive");
  return fam.log_norm_const - std::log(eps) - fam.rho_saturated(eps);
}

// Location score of the noise density: u_h(eps) = 1 + eps (log h)'(eps) = -eps rho'(eps).
inline double u_h(const LossFamily& fam, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("u_h: eps must be positive");
  return -eps * fam.rho_prime(eps);
}

namespace detail {

// log f(y | x; beta) without domain checks; extreme ratios saturate.  Used on
// optimiser trial points where a wild beta must yield a huge-but-finite value
// rather than an exception.
inline double log_conditional_density_raw(const LossFamily& fam, double log_y, double xb) {
  const double log_eps = log_y - xb;
  const double eps = std::exp(std::min(std::max(log_eps, -745.0), 709.0));
  return fam.log_norm_const - log_y - fam.rho_saturated(eps);
}

}  // namespace detail

// Conditional density f(y | x; beta) = h(y / t) / t with t = exp(x' beta).
// The linear predictor is restricted to |x' beta| <= 700 so t stays inside the
// representable log domain.
inline double log_conditional_density(const LossFamily& fam, double y, const Eigen::VectorXd& x,
                                      const Coefficients& beta) {
  if (!(y > 0.0) || !std::isfinite(y)) throw DomainError("log_conditional_density: y must be positive");
  if (x.size() != beta.size()) throw DimensionError("log_conditional_density: x/beta size mismatch");
  const double xb = x.dot(beta);
  if (!std::isfinite(xb)) throw NonFiniteError("log_conditional_density: non-finite linear predictor");
  if (std::abs(xb) > 700.0)
    throw OverflowError("log_conditional_density: |x' beta| = " + std::to_string(std::abs(xb)) +
                        " exceeds the log-domain bound 700");
  return detail::log_conditional_density_raw(fam, std::log(y), xb);
}

inline double conditional_density(const LossFamily& fam, double y, const Eigen::VectorXd& x,
                                  const Coefficients& beta) {
  return std::exp(log_conditional_density(fam, y, x, beta));
}

// Score d/dbeta log f(y | x; beta) = x * eps * rho'(eps) with eps = y / exp(x' beta).
inline Eigen::VectorXd score(const LossFamily& fam, double y, const Eigen::VectorXd& x,
                             const Coefficients& beta) {
  if (!(y > 0.0) || !std::isfinite(y)) throw DomainError("score: y must be positive");
  if (x.size() != beta.size()) throw DimensionError("score: x/beta size mismatch");
  const double xb = x.dot(beta);
  if (!std::isfinite(xb)) throw NonFiniteError("score: non-finite linear predictor");
  if (std::abs(xb) > 700.0)
    throw OverflowError("score: |x' beta| exceeds the log-domain bound 700");
  const double eps = std::exp(std::min(std::max(std::log(y) - xb, -745.0), 709.0));
  double er = eps * fam.rho_prime(eps);
  if (!std::isfinite(er)) er = er > 0 ? 8.9e307 : -8.9e307;
  return x * er;
}

}  // namespace relerr

#endif  // RELERR_LOSS_HPP
