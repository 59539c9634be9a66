#ifndef RELERR_FINITE_DIFF_HPP
#define RELERR_FINITE_DIFF_HPP

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "relerr/errors.hpp"

namespace relerr {

// Central-difference gradient of a scalar function of a vector argument.
template <class F>
Eigen::VectorXd finite_diff_gradient(F&& f, const Eigen::VectorXd& x, double h = 1e-6) {
  if (!(h > 0.0)) throw DomainError("finite_diff_gradient: h must be positive");
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NonFiniteError("finite_diff_gradient: non-finite value at probe coordinate " +
                           std::to_string(i));
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace relerr

#endif  // RELERR_FINITE_DIFF_HPP
