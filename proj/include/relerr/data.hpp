#ifndef RELERR_DATA_HPP
#define RELERR_DATA_HPP

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "relerr/errors.hpp"

namespace relerr {

using Coefficients = Eigen::VectorXd;

// Regression sample for the multiplicative model y = exp(x' beta) * eps.
// Responses must be strictly positive; row indices in error messages are
// 1-based to match source-file rows.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  bool has_intercept = false;

  Dataset(Eigen::MatrixXd x_in, Eigen::VectorXd y_in, bool intercept = false)
      : X(std::move(x_in)), y(std::move(y_in)), has_intercept(intercept) {
    if (X.rows() == 0 || X.cols() == 0) throw DataError("Dataset: X must be non-empty");
    if (y.size() != X.rows())
      throw DimensionError("Dataset: y has " + std::to_string(y.size()) + " rows but X has " +
                           std::to_string(X.rows()));
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (!std::isfinite(y[i]))
        throw DataError("Dataset: non-finite response at row " + std::to_string(i + 1));
      if (!(y[i] > 0.0))
        throw DataError("Dataset: response must be positive at row " + std::to_string(i + 1));
    }
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      for (Eigen::Index j = 0; j < X.cols(); ++j)
        if (!std::isfinite(X(i, j)))
          throw DataError("Dataset: non-finite predictor at row " + std::to_string(i + 1) +
                          ", column " + std::to_string(j + 1));
    if (has_intercept) {
      for (Eigen::Index i = 0; i < X.rows(); ++i)
        if (X(i, 0) != 1.0)
          throw DataError("Dataset: intercept column must be all ones (row " +
                          std::to_string(i + 1) + ")");
    }
  }

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
};

}  // namespace relerr

#endif  // RELERR_DATA_HPP
