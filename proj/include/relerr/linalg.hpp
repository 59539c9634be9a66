#ifndef RELERR_LINALG_HPP
#define RELERR_LINALG_HPP

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "relerr/errors.hpp"

namespace relerr {

struct SymmetricInverse {
  Eigen::MatrixXd inverse;
  double condition;  // lambda_max / lambda_min of the symmetrised input
  bool floored;      // true if any eigenvalue was raised to the floor
};

// Inverse of a symmetric positive (semi)definite matrix via eigendecomposition.
// Eigenvalues below floor_rel * lambda_max are raised to that floor so mildly
// indefinite numerical noise does not flip signs; matrices with condition
// number beyond cond_limit are rejected outright.
inline SymmetricInverse invert_symmetric(const Eigen::MatrixXd& a, double floor_rel = 1e-12,
                                         double cond_limit = 1e12) {
  if (a.rows() != a.cols()) throw DimensionError("invert_symmetric: matrix must be square");
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw NonFiniteError("invert_symmetric: eigensolver failed");
  const Eigen::VectorXd lambda = es.eigenvalues();
  const double lmax = lambda.maxCoeff();
  const double lmin = lambda.minCoeff();
  if (!(lmax > 0.0)) throw SingularMatrixError("invert_symmetric: matrix is not positive definite");
  const double cond = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  if (cond > cond_limit)
    throw SingularMatrixError("invert_symmetric: condition number " + std::to_string(cond) +
                              " exceeds limit");
  const double floor = floor_rel * lmax;
  bool floored = false;
  Eigen::VectorXd inv_lambda(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    double l = lambda[i];
    if (l < floor) {
      l = floor;
      floored = true;
    }
    inv_lambda[i] = 1.0 / l;
  }
  Eigen::MatrixXd inv =
      es.eigenvectors() * inv_lambda.asDiagonal() * es.eigenvectors().transpose();
  return {0.5 * (inv + inv.transpose()), cond, floored};
}

inline double min_eigenvalue(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
  if (es.info() != Eigen::Success) throw NonFiniteError("min_eigenvalue: eigensolver failed");
  return es.eigenvalues().minCoeff();
}

}  // namespace relerr

#endif  // RELERR_LINALG_HPP
