#ifndef RELERR_OBJECTIVE_HPP
#define RELERR_OBJECTIVE_HPP

#include <cmath>
#include <memory>
#include <mutex>
#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "relerr/asymptotics.hpp"
#include "relerr/data.hpp"
#include "relerr/errors.hpp"
#include "relerr/loss.hpp"
#include "relerr/util.hpp"

namespace relerr {

struct ObjectiveValue {
  double total = 0.0;
  double ell1 = 0.0;
  double ell2 = 0.0;
};

// Negative gamma-likelihood of the multiplicative model,
//
//   ell(beta) = -(1/gamma) log sum_i f(y_i|x_i;beta)^gamma
//             + (1/(1+gamma)) log sum_i exp(-gamma x_i' beta)      (+ const, dropped)
//
// with gamma = 0 treated as a first-class code path returning the exact
// negative mean log-likelihood (ell2 = 0 by convention at gamma = 0).
class GammaObjective {
 public:
  GammaObjective(LossFamily fam, double gamma, Dataset data, const QuadratureSpec& spec = {})
      : fam_(std::move(fam)), gamma_(gamma), data_(std::move(data)) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
      throw DomainError("GammaObjective: gamma must be >= 0");
    log_y_.resize(data_.n());
    for (Eigen::Index i = 0; i < data_.n(); ++i) log_y_[i] = std::log(data_.y[i]);
    c_gamma_h_ = gamma == 0.0 ? 1.0 : noise_constants(fam_, gamma, spec).c;
    cache_ = std::make_unique<Ell2Cache>();
  }

  GammaObjective(const GammaObjective& other)
      : fam_(other.fam_), gamma_(other.gamma_), data_(other.data_), log_y_(other.log_y_),
        c_gamma_h_(other.c_gamma_h_), cache_(std::make_unique<Ell2Cache>()) {}
  GammaObjective& operator=(const GammaObjective&) = delete;

  const LossFamily& loss() const { return fam_; }
  double gamma() const { return gamma_; }
  const Dataset& data() const { return data_; }
  double c_gamma_h() const { return c_gamma_h_; }
  const Eigen::VectorXd& log_responses() const { return log_y_; }

  // log f(y_i | x_i; beta) for all rows; extreme ratios saturate to finite values.
  Eigen::VectorXd log_densities(const Coefficients& beta) const {
    check_beta(beta);
    const Eigen::VectorXd xb = data_.X * beta;
    Eigen::VectorXd lf(data_.n());
    for (Eigen::Index i = 0; i < data_.n(); ++i)
      lf[i] = detail::log_conditional_density_raw(fam_, log_y_[i], xb[i]);
    return lf;
  }

  ObjectiveValue eval(const Coefficients& beta) const {
    const Eigen::VectorXd lf = log_densities(beta);
    for (Eigen::Index i = 0; i < lf.size(); ++i)
      if (std::isnan(lf[i])) throw NonFiniteError("eval: log density is NaN");
    ObjectiveValue v;
    if (gamma_ == 0.0) {
      v.ell1 = -lf.mean();
      v.ell2 = 0.0;
    } else {
      v.ell1 = -logsumexp(gamma_ * lf) / gamma_;
      v.ell2 = logsumexp(-gamma_ * (data_.X * beta)) / (1.0 + gamma_);
    }
    v.total = v.ell1 + v.ell2;
    return v;
  }

  // d/dbeta of eval: -sum_i w_i s_i + d ell2, with w = softmax(gamma log f)
  // and d ell2 = -(gamma/(1+gamma)) sum_i pi_i x_i, pi = softmax(-gamma X beta).
  Eigen::VectorXd gradient(const Coefficients& beta) const {
    check_beta(beta);
    const Eigen::VectorXd er = eps_rho_prime(beta);
    if (gamma_ == 0.0) {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(data_.p());
      for (Eigen::Index i = 0; i < data_.n(); ++i) g -= er[i] * data_.X.row(i).transpose();
      return g / static_cast<double>(data_.n());
    }
    const Eigen::VectorXd w = softmax(gamma_ * log_densities(beta));
    Eigen::VectorXd g = Eigen::VectorXd::Zero(data_.p());
    for (Eigen::Index i = 0; i < data_.n(); ++i) g -= w[i] * er[i] * data_.X.row(i).transpose();
    return g + ell2_gradient(beta);
  }

  // Estimating-function contribution psi(y|x;beta) = f^gamma (s - d ell2).
  // d ell2 is free of y and shared across calls at the same beta.
  Eigen::VectorXd psi(double y, const Eigen::VectorXd& x, const Coefficients& beta) const {
    if (!(y > 0.0) || !std::isfinite(y)) throw DomainError("psi: y must be positive");
    if (x.size() != data_.p()) throw DimensionError("psi: x has wrong length");
    check_beta(beta);
    const Eigen::VectorXd dl2 = ell2_gradient(beta);
    const double xb = x.dot(beta);
    const double lf = detail::log_conditional_density_raw(fam_, std::log(y), xb);
    if (gamma_ > 0.0) {
      const double fg = std::exp(gamma_ * lf);
      if (fg == 0.0) return Eigen::VectorXd::Zero(data_.p());
      const double eps = std::exp(std::min(std::max(std::log(y) - xb, -745.0), 709.0));
      double er = eps * fam_.rho_prime(eps);
      if (!std::isfinite(er)) er = er > 0 ? 8.9e307 : -8.9e307;
      return fg * (x * er - dl2);
    }
    const double eps = std::exp(std::min(std::max(std::log(y) - xb, -745.0), 709.0));
    double er = eps * fam_.rho_prime(eps);
    if (!std::isfinite(er)) er = er > 0 ? 8.9e307 : -8.9e307;
    return x * er - dl2;
  }

  // -(gamma/(1+gamma)) X' softmax(-gamma X beta); zero vector at gamma = 0.
  // Cached per beta since psi is typically called once per row at a fixed beta.
  Eigen::VectorXd ell2_gradient(const Coefficients& beta) const {
    check_beta(beta);
    if (gamma_ == 0.0) return Eigen::VectorXd::Zero(data_.p());
    {
      std::lock_guard<std::mutex> lock(cache_->mu);
      if (cache_->beta && cache_->beta->size() == beta.size() && *cache_->beta == beta)
        return cache_->value;
    }
    const Eigen::VectorXd pi = softmax(-gamma_ * (data_.X * beta));
    Eigen::VectorXd g = Eigen::VectorXd::Zero(data_.p());
    for (Eigen::Index i = 0; i < data_.n(); ++i) g += pi[i] * data_.X.row(i).transpose();
    g *= -gamma_ / (1.0 + gamma_);
    std::lock_guard<std::mutex> lock(cache_->mu);
    cache_->beta = beta;
    cache_->value = g;
    return g;
  }

  // Density-power divergence variant,
  //   -(1/gamma)(1/n) sum f^gamma + (C(gamma,h)/(1+gamma))(1/n) sum t^{-gamma}.
  double eval_density_power(const Coefficients& beta) const {
    if (gamma_ == 0.0)
      throw DomainError("eval_density_power: gamma must be > 0 (use eval at gamma = 0)");
    const Eigen::VectorXd lf = log_densities(beta);
    const Eigen::VectorXd xb = data_.X * beta;
    const double n = static_cast<double>(data_.n());
    double s1 = 0.0, s2 = 0.0;
    for (Eigen::Index i = 0; i < data_.n(); ++i) {
      s1 += std::exp(gamma_ * lf[i]);
      s2 += std::exp(-gamma_ * xb[i]);
    }
    return -s1 / (gamma_ * n) + c_gamma_h_ * s2 / ((1.0 + gamma_) * n);
  }

  Eigen::VectorXd gradient_density_power(const Coefficients& beta) const {
    if (gamma_ == 0.0) throw DomainError("gradient_density_power: gamma must be > 0");
    const Eigen::VectorXd lf = log_densities(beta);
    const Eigen::VectorXd xb = data_.X * beta;
    const Eigen::VectorXd er = eps_rho_prime(beta);
    const double n = static_cast<double>(data_.n());
    Eigen::VectorXd g = Eigen::VectorXd::Zero(data_.p());
    for (Eigen::Index i = 0; i < data_.n(); ++i) {
      g -= std::exp(gamma_ * lf[i]) * er[i] * data_.X.row(i).transpose();
      g -= gamma_ * c_gamma_h_ / (1.0 + gamma_) * std::exp(-gamma_ * xb[i]) *
           data_.X.row(i).transpose();
    }
    return g / n;
  }

  // eps_i rho'(eps_i) with eps_i = y_i / exp(x_i' beta), clamped at the
  // representable range so zero predictor entries never multiply an inf.
  Eigen::VectorXd eps_rho_prime(const Coefficients& beta) const {
    check_beta(beta);
    const Eigen::VectorXd xb = data_.X * beta;
    Eigen::VectorXd er(data_.n());
    for (Eigen::Index i = 0; i < data_.n(); ++i) {
      const double eps = std::exp(std::min(std::max(log_y_[i] - xb[i], -745.0), 709.0));
      double v = eps * fam_.rho_prime(eps);
      if (!std::isfinite(v)) v = v > 0 ? 8.9e307 : -8.9e307;
      er[i] = v;
    }
    return er;
  }

 private:
  struct Ell2Cache {
    std::mutex mu;
    std::optional<Eigen::VectorXd> beta;
    Eigen::VectorXd value;
  };

  void check_beta(const Coefficients& beta) const {
    if (beta.size() != data_.p()) throw DimensionError("GammaObjective: beta has wrong length");
    if (!beta.allFinite()) throw NonFiniteError("GammaObjective: beta must be finite");
  }

  LossFamily fam_;
  double gamma_;
  Dataset data_;
  Eigen::VectorXd log_y_;
  double c_gamma_h_;
  std::unique_ptr<Ell2Cache> cache_;
};

}  // namespace relerr

#endif  // RELERR_OBJECTIVE_HPP
