#ifndef RELERR_ESTIMATOR_HPP
#define RELERR_ESTIMATOR_HPP

#include <cmath>
#include <deque>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "relerr/data.hpp"
#include "relerr/errors.hpp"
#include "relerr/objective.hpp"
#include "relerr/util.hpp"

namespace relerr {

struct InnerSolverConfig {
  int newton_max_iter = 50;
  double newton_tol = 1e-10;
  double line_search_shrink = 0.5;

  void validate() const {
    if (newton_max_iter < 1) throw DomainError("InnerSolverConfig: newton_max_iter must be >= 1");
    if (!(newton_tol > 0.0)) throw DomainError("InnerSolverConfig: newton_tol must be positive");
    if (!(line_search_shrink > 0.0) || !(line_search_shrink < 1.0))
      throw DomainError("InnerSolverConfig: line_search_shrink must lie in (0, 1)");
  }
};

enum class FitMode { kMm, kQuasiNewton, kHybrid };

inline std::string to_string(FitMode mode) {
  switch (mode) {
    case FitMode::kMm: return "mm";
    case FitMode::kQuasiNewton: return "quasi_newton";
    default: return "hybrid";
  }
}

struct MmConfig {
  int max_iter = 500;
  double tol_beta = 1e-8;   // sup-norm step tolerance
  double tol_obj = 1e-10;   // objective decrease tolerance
  InnerSolverConfig inner;
  FitMode mode = FitMode::kMm;
  int hybrid_mm_iters = 10;

  void validate() const {
    if (max_iter < 1) throw DomainError("MmConfig: max_iter must be >= 1");
    if (!(tol_beta > 0.0) || !(tol_obj > 0.0))
      throw DomainError("MmConfig: tolerances must be positive");
    if (mode == FitMode::kHybrid && hybrid_mm_iters < 1)
      throw DomainError("MmConfig: hybrid_mm_iters must be >= 1");
    inner.validate();
  }
};

struct FitTrace {
  std::vector<double> objective_per_iter;  // objective_per_iter[0] is the start value
  std::vector<double> step_norm_per_iter;
  bool converged = false;
  int iterations = 0;
  bool degenerate_weights = false;  // some iteration saw near-total mass collapse
  bool inner_failure = false;       // inner Newton returned its best iterate early
};

struct FitResult {
  Coefficients beta_hat;
  FitTrace trace;
  double gamma = 0.0;
  LossKind loss_kind = LossKind::kLpre;
  double objective = 0.0;
  double grad_norm = 0.0;  // sup-norm of the objective gradient at beta_hat
};

// Softmax weights w_i = f_i^gamma / sum_j f_j^gamma at the current iterate;
// uniform at gamma = 0.  *degenerate is set when a single observation holds
// essentially all mass (warning, not an error).
inline Eigen::VectorXd mm_weights(const GammaObjective& obj, const Coefficients& beta_t,
                                  bool* degenerate = nullptr) {
  const Eigen::Index n = obj.data().n();
  Eigen::VectorXd w;
  if (obj.gamma() == 0.0) {
    w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  } else {
    w = softmax(obj.gamma() * obj.log_densities(beta_t));
  }
  if (degenerate) *degenerate = n > 1 && w.maxCoeff() > 1.0 - 1e-12;
  return w;
}

// X' B X with the log-sum-exp curvature bound B = (I - 11'/n) / 2.
inline Eigen::MatrixXd bohning_bound(const Eigen::MatrixXd& x) {
  const double n = static_cast<double>(x.rows());
  const Eigen::VectorXd colsum = x.transpose() * Eigen::VectorXd::Ones(x.rows());
  return 0.5 * (x.transpose() * x - colsum * colsum.transpose() / n);
}

// Weighted negative log-likelihood surrogate for ell1,
//   sum_i w_i rho(eps_i(beta)) + const,
// with the constant fixed so the surrogate touches ell1 at beta_t exactly.
class Ell1Majorizer {
 public:
  Ell1Majorizer(const GammaObjective& obj, const Coefficients& beta_t) : obj_(&obj) {
    w_ = mm_weights(obj, beta_t, &degenerate_);
    const LossFamily& fam = obj.loss();
    double c = -fam.log_norm_const;
    for (Eigen::Index i = 0; i < w_.size(); ++i) c += w_[i] * obj.log_responses()[i];
    if (obj.gamma() > 0.0) {
      const Eigen::VectorXd logits = obj.gamma() * obj.log_densities(beta_t);
      const double lse = logsumexp(logits);
      for (Eigen::Index i = 0; i < w_.size(); ++i)
        if (w_[i] > 0.0) c += w_[i] * (logits[i] - lse) / obj.gamma();
    }
    const_term_ = c;
  }

  double value(const Coefficients& beta) const {
    const Eigen::VectorXd xb = obj_->data().X * beta;
    const LossFamily& fam = obj_->loss();
    double s = const_term_;
    for (Eigen::Index i = 0; i < w_.size(); ++i) {
      if (w_[i] == 0.0) continue;
      const double eps =
          std::exp(std::min(std::max(obj_->log_responses()[i] - xb[i], -745.0), 709.0));
      s += w_[i] * fam.rho_saturated(eps);
    }
    return s;
  }

  Eigen::VectorXd gradient(const Coefficients& beta) const {
    const Eigen::VectorXd er = obj_->eps_rho_prime(beta);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(beta.size());
    for (Eigen::Index i = 0; i < w_.size(); ++i)
      if (w_[i] > 0.0) g -= w_[i] * er[i] * obj_->data().X.row(i).transpose();
    return g;
  }

  // sum_i w_i eps_i (rho'(eps_i) + eps_i rho''(eps_i)) x_i x_i'; for LPRE the
  // scalar factor is y_i/t_i + t_i/y_i.
  Eigen::MatrixXd hessian(const Coefficients& beta) const {
    const Eigen::VectorXd xb = obj_->data().X * beta;
    const LossFamily& fam = obj_->loss();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(beta.size(), beta.size());
    for (Eigen::Index i = 0; i < w_.size(); ++i) {
      if (w_[i] == 0.0) continue;
      const double eps =
          std::exp(std::min(std::max(obj_->log_responses()[i] - xb[i], -745.0), 709.0));
      double phi = eps * (fam.rho_prime(eps) + eps * fam.rho_second(eps));
      if (!std::isfinite(phi)) phi = 8.9e307;
      h.noalias() +=
          (w_[i] * phi) * (obj_->data().X.row(i).transpose() * obj_->data().X.row(i));
    }
    return h;
  }

  const Eigen::VectorXd& weights() const { return w_; }
  bool degenerate_weights() const { return degenerate_; }

 private:
  const GammaObjective* obj_;
  Eigen::VectorXd w_;
  double const_term_ = 0.0;
  bool degenerate_ = false;
};

// Quadratic surrogate for ell2 from a Taylor expansion of log-sum-exp with the
// Bohning curvature bound:
//   gamma^2/(2(1+gamma)) beta' K beta - gamma/(1+gamma) beta' (X'pi + gamma K beta_t) + c0,
// K = X' B X.  The constant c0 makes the surrogate touch ell2 at beta_t.
// Identically zero at gamma = 0.
class Ell2Majorizer {
 public:
  Ell2Majorizer(const GammaObjective& obj, const Coefficients& beta_t)
      : gamma_(obj.gamma()), p_(obj.data().p()) {
    if (gamma_ == 0.0) return;
    k_ = bohning_bound(obj.data().X);
    const Eigen::VectorXd pi = softmax(-gamma_ * (obj.data().X * beta_t));
    lin_ = obj.data().X.transpose() * pi + gamma_ * (k_ * beta_t);
    const double ell2_t = logsumexp(-gamma_ * (obj.data().X * beta_t)) / (1.0 + gamma_);
    c0_ = ell2_t - quad_part(beta_t);
  }

  double value(const Coefficients& beta) const {
    return gamma_ == 0.0 ? 0.0 : quad_part(beta) + c0_;
  }

  Eigen::VectorXd gradient(const Coefficients& beta) const {
    if (gamma_ == 0.0) return Eigen::VectorXd::Zero(p_);
    const double a = gamma_ * gamma_ / (1.0 + gamma_);
    return a * (k_ * beta) - gamma_ / (1.0 + gamma_) * lin_;
  }

  Eigen::MatrixXd hessian() const {
    if (gamma_ == 0.0) return Eigen::MatrixXd::Zero(p_, p_);
    return gamma_ * gamma_ / (1.0 + gamma_) * k_;
  }

 private:
  double quad_part(const Coefficients& beta) const {
    const double a = gamma_ * gamma_ / (2.0 * (1.0 + gamma_));
    return a * beta.dot(k_ * beta) - gamma_ / (1.0 + gamma_) * beta.dot(lin_);
  }

  double gamma_;
  Eigen::Index p_;
  Eigen::MatrixXd k_;
  Eigen::VectorXd lin_;
  double c0_ = 0.0;
};

inline Ell1Majorizer majorizer_ell1(const GammaObjective& obj, const Coefficients& beta_t) {
  return Ell1Majorizer(obj, beta_t);
}

inline Ell2Majorizer majorizer_ell2(const GammaObjective& obj, const Coefficients& beta_t) {
  return Ell2Majorizer(obj, beta_t);
}

struct MmStepInfo {
  bool inner_converged = true;
  bool degenerate_weights = false;
  double surrogate_grad_norm = 0.0;
};

// One majorize-minimize step: damped Newton with Armijo backtracking on the
// convex surrogate ell1~ + ell2~, started (and therefore never worse than) the
// current iterate.  On inner-solver trouble the best iterate found is returned
// with info->inner_converged = false; descent of the true objective still holds
// because only surrogate decreases are ever accepted.
inline Coefficients mm_step(const GammaObjective& obj, const Coefficients& beta_t,
                            const InnerSolverConfig& cfg = {}, MmStepInfo* info = nullptr) {
  cfg.validate();
  const Ell1Majorizer s1(obj, beta_t);
  const Ell2Majorizer s2(obj, beta_t);
  auto value = [&](const Coefficients& b) { return s1.value(b) + s2.value(b); };

  Coefficients beta = beta_t;
  double val = value(beta);
  bool converged = false;
  double grad_norm = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.newton_max_iter; ++it) {
    const Eigen::VectorXd g = s1.gradient(beta) + s2.gradient(beta);
    grad_norm = g.lpNorm<Eigen::Infinity>();
    if (grad_norm <= cfg.newton_tol) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd h = s1.hessian(beta) + s2.hessian();
    Eigen::VectorXd d;
    double ridge = 0.0;
    bool have_direction = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::MatrixXd hr = h;
      if (ridge > 0.0) hr.diagonal().array() += ridge;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(hr);
      if (ldlt.info() == Eigen::Success) {
        d = ldlt.solve(-g);
        if (d.allFinite() && g.dot(d) < 0.0) {
          have_direction = true;
          break;
        }
      }
      ridge = ridge == 0.0 ? 1e-10 * (1.0 + h.trace() / static_cast<double>(h.rows()))
                           : ridge * 100.0;
    }
    if (!have_direction) break;
    const double slope = g.dot(d);
    double t = 1.0;
    bool accepted = false;
    while (t >= 1e-16) {
      const Coefficients trial = beta + t * d;
      const double tv = value(trial);
      if (std::isfinite(tv) && tv <= val + 1e-4 * t * slope) {
        beta = trial;
        val = tv;
        accepted = true;
        break;
      }
      t *= cfg.line_search_shrink;
    }
    if (!accepted) break;
  }
  if (info) {
    info->inner_converged = converged;
    info->degenerate_weights = s1.degenerate_weights();
    info->surrogate_grad_norm = grad_norm;
  }
  return beta;
}

// Zero slopes; intercept (if any) starts at log of the geometric mean of y so
// the initial fitted scale matches the data.
inline Coefficients default_beta0(const Dataset& data) {
  Coefficients beta = Coefficients::Zero(data.p());
  if (data.has_intercept) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) m += std::log(data.y[i]);
    beta[0] = m / static_cast<double>(data.n());
  }
  return beta;
}

namespace detail {

// Limited-memory BFGS with Armijo backtracking on eval/gradient.  Runs until
// tolerance or budget; returns false if a line search could not find any
// decrease (callers fall back to MM steps in that case).
inline bool lbfgs_phase(const GammaObjective& obj, Coefficients& beta, double& val,
                        FitTrace& trace, const MmConfig& cfg, int memory = 10) {
  const double grad_tol = 10.0 * std::sqrt(cfg.tol_obj);
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;  // (s, y)
  Eigen::VectorXd g = obj.gradient(beta);
  if (!g.allFinite()) throw NonFiniteError("fit: non-finite gradient in quasi-Newton phase");
  while (trace.iterations < cfg.max_iter) {
    if (g.lpNorm<Eigen::Infinity>() <= grad_tol) {
      trace.converged = true;
      return true;
    }
    Eigen::VectorXd q = g;
    std::vector<double> alpha(pairs.size());
    for (std::size_t i = pairs.size(); i-- > 0;) {
      const auto& [s, y] = pairs[i];
      alpha[i] = s.dot(q) / y.dot(s);
      q -= alpha[i] * y;
    }
    if (!pairs.empty()) {
      const auto& [s, y] = pairs.back();
      q *= s.dot(y) / y.dot(y);
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& [s, y] = pairs[i];
      const double b = y.dot(q) / y.dot(s);
      q += (alpha[i] - b) * s;
    }
    Eigen::VectorXd d = -q;
    if (!(g.dot(d) < 0.0)) {
      pairs.clear();
      d = -g;
    }
    const double slope = g.dot(d);
    double t = 1.0;
    bool accepted = false;
    Coefficients beta_new;
    double val_new = 0.0;
    while (t >= 1e-16) {
      beta_new = beta + t * d;
      val_new = obj.eval(beta_new).total;
      if (std::isfinite(val_new) && val_new <= val + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= cfg.inner.line_search_shrink;
    }
    if (!accepted) return false;  // no decrease possible along d

    const Eigen::VectorXd g_new = obj.gradient(beta_new);
    if (!g_new.allFinite()) throw NonFiniteError("fit: non-finite gradient in quasi-Newton phase");
    const Eigen::VectorXd s = beta_new - beta;
    const Eigen::VectorXd y = g_new - g;
    if (y.dot(s) > 1e-12 * s.norm() * y.norm()) {
      pairs.emplace_back(s, y);
      if (static_cast<int>(pairs.size()) > memory) pairs.pop_front();
    }
    const double step = s.lpNorm<Eigen::Infinity>();
    const double decrease = val - val_new;
    beta = beta_new;
    val = val_new;
    g = g_new;
    ++trace.iterations;
    trace.objective_per_iter.push_back(val);
    trace.step_norm_per_iter.push_back(step);
    // A flat step far from stationarity is no reason to quit; with a cold
    // memory the first moves are steepest descent and can be microscopic on
    // ill-conditioned problems until curvature pairs accumulate.
    if ((step <= cfg.tol_beta || decrease <= cfg.tol_obj) &&
        g.lpNorm<Eigen::Infinity>() <= grad_tol) {
      trace.converged = true;
      return true;
    }
  }
  return true;  // budget exhausted; not converged but nothing to fall back to
}

}  // namespace detail

// Minimize the negative gamma-likelihood.  MM mode iterates mm_step and is
// monotone by construction; QUASI_NEWTON runs L-BFGS directly; HYBRID takes
// hybrid_mm_iters MM steps first and falls back to MM if a quasi-Newton line
// search stalls.
inline FitResult fit(const GammaObjective& obj, const Coefficients& beta0, const MmConfig& cfg = {}) {
  cfg.validate();
  if (beta0.size() != obj.data().p()) throw DimensionError("fit: beta0 has wrong length");
  if (!beta0.allFinite()) throw NonFiniteError("fit: beta0 must be finite");

  FitResult res;
  res.gamma = obj.gamma();
  res.loss_kind = obj.loss().kind;

  Coefficients beta = beta0;
  double val = obj.eval(beta).total;
  if (!std::isfinite(val)) throw NonFiniteError("fit: objective not finite at beta0");
  FitTrace& trace = res.trace;
  trace.objective_per_iter.push_back(val);

  bool want_qn = cfg.mode != FitMode::kMm;
  int qn_attempts_left = cfg.mode == FitMode::kHybrid ? 4 : 1;
  const int mm_budget_before_qn =
      cfg.mode == FitMode::kHybrid ? cfg.hybrid_mm_iters : (cfg.mode == FitMode::kMm ? cfg.max_iter : 0);
  const double grad_gate = 10.0 * std::sqrt(cfg.tol_obj);

  int mm_phase_iters = 0;
  while (trace.iterations < cfg.max_iter) {
    if (want_qn && mm_phase_iters >= mm_budget_before_qn && qn_attempts_left > 0) {
      want_qn = false;
      --qn_attempts_left;
      if (detail::lbfgs_phase(obj, beta, val, trace, cfg)) break;
      trace.inner_failure = true;  // line search stalled; resume MM below
      mm_phase_iters = 0;
    }
    MmStepInfo info;
    const Coefficients beta_next = mm_step(obj, beta, cfg.inner, &info);
    double val_next = obj.eval(beta_next).total;
    trace.degenerate_weights = trace.degenerate_weights || info.degenerate_weights;
    trace.inner_failure = trace.inner_failure || !info.inner_converged;
    Coefficients accepted = beta_next;
    if (!(val_next <= val)) {  // rounding wobble at a fixed point; keep the old iterate
      accepted = beta;
      val_next = val;
    }
    const double step = (accepted - beta).lpNorm<Eigen::Infinity>();
    const double decrease = val - val_next;
    beta = accepted;
    val = val_next;
    ++trace.iterations;
    ++mm_phase_iters;
    trace.objective_per_iter.push_back(val);
    trace.step_norm_per_iter.push_back(step);
    if (step <= cfg.tol_beta || decrease <= cfg.tol_obj) {
      // The flat-step criterion can fire while the gradient is still large
      // (the MM tail is linear); in hybrid mode keep going instead of
      // returning a non-stationary iterate: spend a fresh quasi-Newton round
      // on it while attempts remain, else let MM grind through the plateau.
      if (cfg.mode == FitMode::kHybrid &&
          obj.gradient(beta).lpNorm<Eigen::Infinity>() > grad_gate) {
        if (qn_attempts_left > 0) {
          want_qn = true;
          mm_phase_iters = mm_budget_before_qn;
        }
        continue;
      }
      trace.converged = true;
      break;
    }
  }

  res.beta_hat = beta;
  res.objective = val;
  res.grad_norm = obj.gradient(beta).lpNorm<Eigen::Infinity>();
  trace.converged = trace.converged && res.grad_norm <= 10.0 * std::sqrt(cfg.tol_obj);
  return res;
}

}  // namespace relerr

#endif  // RELERR_ESTIMATOR_HPP
