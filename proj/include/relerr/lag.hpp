#ifndef RELERR_LAG_HPP
#define RELERR_LAG_HPP

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "relerr/data.hpp"
#include "relerr/errors.hpp"

namespace relerr {

// Seasonal lag design: target y_t is explained by (y_{t-d}, ..., y_{t-dq}),
// the value at the same position in each of the q previous periods of length d.
struct LagSpec {
  int d = 96;        // period length
  int q = 5;         // number of past periods used as features
  int window_n = 0;  // rolling training window in usable rows (0 = not used)

  void validate() const {
    if (d < 1 || q < 1) throw DomainError("LagSpec: d and q must be >= 1");
    if (window_n != 0 && d * q >= window_n)
      throw DomainError("LagSpec: window_n must exceed d*q");
  }
};

struct LagData {
  Dataset data;
  std::vector<Eigen::Index> target_index;  // 0-based index into the source series
};

// Build the lag design from a strictly positive series.  The first usable
// target is at 1-based position d*q + 1; earlier rows lack a full feature set
// and are dropped.
inline LagData make_lag_data(const std::vector<double>& series, const LagSpec& spec,
                             bool add_intercept = false) {
  spec.validate();
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!std::isfinite(series[i]))
      throw DataError("lag series: non-finite value at index " + std::to_string(i + 1));
    if (!(series[i] > 0.0))
      throw DataError("lag series: nonpositive value at index " + std::to_string(i + 1));
  }
  const auto n_series = static_cast<Eigen::Index>(series.size());
  const Eigen::Index first = static_cast<Eigen::Index>(spec.d) * spec.q;  // 0-based target
  if (first >= n_series)
    throw DataError("lag series: too short for d*q = " + std::to_string(first) + " lags");
  const Eigen::Index rows = n_series - first;
  const Eigen::Index p = spec.q + (add_intercept ? 1 : 0);
  Eigen::MatrixXd x(rows, p);
  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index t = first + r;
    y[r] = series[static_cast<std::size_t>(t)];
    Eigen::Index col = 0;
    if (add_intercept) x(r, col++) = 1.0;
    for (int k = 1; k <= spec.q; ++k)
      x(r, col++) = series[static_cast<std::size_t>(t - static_cast<Eigen::Index>(spec.d) * k)];
  }
  LagData out{Dataset(std::move(x), std::move(y), add_intercept), {}};
  out.target_index.resize(static_cast<std::size_t>(rows));
  for (Eigen::Index r = 0; r < rows; ++r) out.target_index[static_cast<std::size_t>(r)] = first + r;
  return out;
}

inline Dataset make_lag_matrix(const std::vector<double>& series, const LagSpec& spec,
                               bool add_intercept = false) {
  return make_lag_data(series, spec, add_intercept).data;
}

}  // namespace relerr

#endif  // RELERR_LAG_HPP
