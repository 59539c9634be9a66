#ifndef RELERR_QUADRATURE_HPP
#define RELERR_QUADRATURE_HPP

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "relerr/errors.hpp"

namespace relerr {

// Tolerances and refinement limits for the adaptive integrators.
struct QuadratureSpec {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double split_point = 1.0;   // where integrate_positive_halfline splits (0, inf)
  int max_refinements = 50;   // maximum bisection depth per panel

  void validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
      throw DomainError("QuadratureSpec: tolerances must be positive");
    if (!(split_point > 0.0) || !std::isfinite(split_point))
      throw DomainError("QuadratureSpec: split_point must be positive and finite");
    if (max_refinements < 1) throw DomainError("QuadratureSpec: max_refinements must be >= 1");
  }
};

namespace detail {

// 15-point Gauss-Kronrod pair on [-1, 1]; abscissae/weights from the classic
// QUADPACK qk15 tables.
inline constexpr double kGk15Nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double kGk15WeightsK[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr double kGk15WeightsG[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct PanelEstimate {
  double integral;
  double error;
};

template <class F>
PanelEstimate gk15_panel(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  auto eval = [&](double x) {
    const double v = f(x);
    if (!std::isfinite(v))
      throw NonFiniteError("quadrature: integrand returned a non-finite value at x = " +
                           std::to_string(x));
    return v;
  };
  const double fc = eval(c);
  double kron = kGk15WeightsK[7] * fc;
  double gauss = kGk15WeightsG[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kGk15Nodes[j];
    const double sum = eval(c - dx) + eval(c + dx);
    kron += kGk15WeightsK[j] * sum;
    if (j % 2 == 1) gauss += kGk15WeightsG[j / 2] * sum;
  }
  return {h * kron, std::abs(h * (kron - gauss))};
}

template <class F>
double adaptive_gk15(F& f, double a, double b, double abs_tol, double rel_tol, int depth) {
  const PanelEstimate est = gk15_panel(f, a, b);
  if (est.error <= abs_tol || est.error <= rel_tol * std::abs(est.integral)) return est.integral;
  if (depth <= 0)
    throw QuadratureError("quadrature: refinement limit reached on [" + std::to_string(a) + ", " +
                          std::to_string(b) + "] with error estimate " + std::to_string(est.error));
  const double m = 0.5 * (a + b);
  return adaptive_gk15(f, a, m, 0.5 * abs_tol, rel_tol, depth - 1) +
         adaptive_gk15(f, m, b, 0.5 * abs_tol, rel_tol, depth - 1);
}

}  // namespace detail

// Adaptive Gauss-Kronrod integration of f over the finite interval [a, b].
template <class F>
double integrate_finite(F&& f, double a, double b, const QuadratureSpec& spec = {}) {
  spec.validate();
  if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("integrate_finite: bounds must be finite");
  if (a == b) return 0.0;
  auto& fn = f;
  const double sgn = (a < b) ? 1.0 : -1.0;
  const double lo = std::min(a, b), hi = std::max(a, b);
  return sgn * detail::adaptive_gk15(fn, lo, hi, spec.abs_tol, spec.rel_tol, spec.max_refinements);
}

// Integral of f over (0, inf).  The half-line is split at spec.split_point s
// and both pieces are mapped onto (0, 1):
//   (0, s]   via v = s u        ->  int_0^1 f(s u) s du
//   [s, inf) via v = s / u      ->  int_0^1 f(s / u) s / u^2 du
// so f must decay fast enough at infinity for the second integrand to stay
// finite at its nodes.  Each piece is then refined adaptively.
template <class F>
double integrate_positive_halfline(F&& f, const QuadratureSpec& spec = {}) {
  spec.validate();
  const double s = spec.split_point;
  auto lower = [&](double u) { return f(s * u) * s; };
  auto upper = [&](double u) { return f(s / u) * s / (u * u); };
  const double i_lo =
      detail::adaptive_gk15(lower, 0.0, 1.0, 0.5 * spec.abs_tol, spec.rel_tol, spec.max_refinements);
  const double i_hi =
      detail::adaptive_gk15(upper, 0.0, 1.0, 0.5 * spec.abs_tol, spec.rel_tol, spec.max_refinements);
  return i_lo + i_hi;
}

}  // namespace relerr

#endif  // RELERR_QUADRATURE_HPP
