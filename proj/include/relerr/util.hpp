#ifndef RELERR_UTIL_HPP
#define RELERR_UTIL_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "relerr/errors.hpp"

namespace relerr {

// log(sum_i exp(v_i)) with max subtraction.  Returns -inf for an empty vector.
inline double logsumexp(const Eigen::VectorXd& v) {
  if (v.size() == 0) return -std::numeric_limits<double>::infinity();
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::exp(v[i] - m);
  return m + std::log(acc);
}

// exp(v_i - logsumexp(v)); entries renormalised so they sum to 1 exactly.
inline Eigen::VectorXd softmax(const Eigen::VectorXd& v) {
  const double lse = logsumexp(v);
  Eigen::VectorXd w(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) w[i] = std::exp(v[i] - lse);
  const double s = w.sum();
  if (!(s > 0.0) || !std::isfinite(s)) throw NonFiniteError("softmax: weights do not normalise");
  w /= s;
  return w;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

// Inverse standard normal CDF.  Bisection to a coarse bracket, then Newton;
// accurate to ~1e-15 over p in (1e-300, 1 - 1e-16).
inline double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");
  if (p == 0.5) return 0.0;
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 40; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 6; ++i) {
    const double step = (normal_cdf(x) - p) / normal_pdf(x);
    if (!std::isfinite(step)) break;
    x -= step;
    if (std::abs(step) < 1e-14 * (1.0 + std::abs(x))) break;
  }
  return x;
}

// Linear-interpolation percentile (the common "type 7" rule) of unsorted data, q in [0,1].
inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) throw DomainError("percentile: empty sample");
  if (!(q >= 0.0) || !(q <= 1.0)) throw DomainError("percentile: q must lie in [0, 1]");
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(h));
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (h - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

inline double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Shortest round-trip decimal representation of a double.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace relerr

#endif  // RELERR_UTIL_HPP
