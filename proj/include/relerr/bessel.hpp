#ifndef RELERR_BESSEL_HPP
#define RELERR_BESSEL_HPP

#include <cmath>

#include "relerr/errors.hpp"
#include "relerr/quadrature.hpp"

namespace relerr {

// Modified Bessel function of the second kind, via the integral representation
//
//   K_nu(z) = z^nu / 2^(nu+1) * int_0^inf t^(-nu-1) exp(-t - z^2 / (4 t)) dt,
//
// valid for z > 0.  The integrand is evaluated in the log domain so small t
// never overflows, and the half-line split is placed near the integrand's
// peak at t ~ z/2.
inline double bessel_k(double nu, double z, QuadratureSpec spec = {}) {
  if (!(z > 0.0) || !std::isfinite(z)) throw DomainError("bessel_k: z must be positive and finite");
  if (!std::isfinite(nu)) throw DomainError("bessel_k: nu must be finite");
  const double q = 0.25 * z * z;
  auto integrand = [nu, q](double t) {
    return std::exp(-t - q / t - (nu + 1.0) * std::log(t));
  };
  spec.abs_tol = std::min(spec.abs_tol, 1e-14);
  spec.rel_tol = std::min(spec.rel_tol, 1e-12);
  spec.split_point = std::max(0.5 * z, 0.5);
  const double integral = integrate_positive_halfline(integrand, spec);
  return std::exp(nu * std::log(z) - (nu + 1.0) * std::log(2.0)) * integral;
}

}  // namespace relerr

#endif  // RELERR_BESSEL_HPP
