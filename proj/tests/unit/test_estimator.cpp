#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "relerr/estimator.hpp"
#include "relerr/linalg.hpp"
#include "relerr/rng.hpp"
#include "support/fixtures.hpp"

using namespace relerr;

namespace {

// Undamped Newton on the convex product-relative-error criterion
// sum_i (y_i/t_i + t_i/y_i - 2); the reference minimizer for gamma = 0 fits.
Eigen::VectorXd newton_reference(const Dataset& data) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(data.p());
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(data.p());
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(data.p(), data.p());
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      const double u = std::log(data.y[i]) - data.X.row(i).dot(b);
      const double eu = std::exp(u);
      grad += (-eu + 1.0 / eu) * data.X.row(i).transpose();
      hess += (eu + 1.0 / eu) * data.X.row(i).transpose() * data.X.row(i);
    }
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    b -= step;
    if (step.norm() < 1e-13) break;
  }
  return b;
}

}  // namespace

TEST_CASE("mm weights are uniform at gamma 0 and for identical rows", "[estimator]") {
  RngStream rng(71, 1);
  const Dataset data = testutil::lognormal_data(rng, 6, 2);
  const GammaObjective obj0(make_loss(LossKind::kLpre), 0.0, data);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(2);
  CHECK((mm_weights(obj0, beta) - Eigen::VectorXd::Constant(6, 1.0 / 6.0)).norm() < 1e-15);

  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(4, 1);
  Eigen::VectorXd y = Eigen::VectorXd::Constant(4, 2.5);
  const Dataset same(x, y, true);
  const GammaObjective obj(make_loss(LossKind::kLpre), 0.5, same);
  Eigen::VectorXd b1(1);
  b1 << 0.3;
  CHECK((mm_weights(obj, b1) - Eigen::VectorXd::Constant(4, 0.25)).norm() < 1e-15);
}

TEST_CASE("mm weights squash a gross outlier and flag degeneracy", "[estimator]") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 1);
  Eigen::VectorXd y(3);
  y << 1.0, 1.1, 1e6;
  const Dataset data(x, y, true);
  const GammaObjective obj(make_loss(LossKind::kLpre), 0.5, data);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(1);
  const Eigen::VectorXd w = mm_weights(obj, beta);
  CHECK(w[2] < 1e-100);
  CHECK(std::abs(w.sum() - 1.0) < 1e-12);

  Eigen::VectorXd y2(3);
  y2 << 1.0, 1e8, 1e-8;
  const Dataset spread(x, y2, true);
  const GammaObjective obj2(make_loss(LossKind::kLpre), 1.0, spread);
  bool degenerate = false;
  const Eigen::VectorXd w2 = mm_weights(obj2, beta, &degenerate);
  CHECK(degenerate);
  CHECK(w2[0] > 1.0 - 1e-12);
}

TEST_CASE("projected curvature bound on hand-checkable designs", "[estimator]") {
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(5, 1);
  CHECK(std::abs(bohning_bound(ones)(0, 0)) < 1e-14);

  Eigen::MatrixXd pm(2, 1);
  pm << 1.0, -1.0;
  CHECK(std::abs(bohning_bound(pm)(0, 0) - 1.0) < 1e-14);
}

TEST_CASE("curvature bound dominates the log-sum-exp hessian", "[estimator]") {
  const int n = 10;
  const Eigen::MatrixXd b = bohning_bound(Eigen::MatrixXd::Identity(n, n));
  RngStream rng(73, 1);
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd theta(n);
    for (int i = 0; i < n; ++i) theta[i] = 2.0 * rng.normal();
    const Eigen::VectorXd pi = softmax(theta);
    const Eigen::MatrixXd hess =
        Eigen::MatrixXd(pi.asDiagonal()) - pi * pi.transpose();
    CHECK(min_eigenvalue(b - hess) >= -1e-12);
  }
}

TEST_CASE("surrogates touch their objective parts at the expansion point", "[estimator]") {
  const Dataset data = testutil::model1_data(81, 40);
  RngStream rng(83, 1);
  for (int k = 0; k < 10; ++k) {
    const double g = (k % 2) ? 0.5 : 1.0;
    const LossFamily& fam = make_loss((k % 3) ? LossKind::kLpre : LossKind::kLsre);
    const GammaObjective obj(fam, g, data);
    Eigen::VectorXd bt(3);
    for (int j = 0; j < 3; ++j) bt[j] = 0.7 + 0.5 * rng.normal();
    const auto m1 = majorizer_ell1(obj, bt);
    const auto m2 = majorizer_ell2(obj, bt);
    const ObjectiveValue v = obj.eval(bt);
    CHECK(std::abs(m1.value(bt) - v.ell1) <= 1e-10 * (1.0 + std::abs(v.ell1)));
    CHECK(std::abs(m2.value(bt) - v.ell2) <= 1e-10 * (1.0 + std::abs(v.ell2)));
  }
}

TEST_CASE("surrogates dominate their objective parts", "[estimator]") {
  const Dataset data = testutil::model1_data(87, 30);
  RngStream rng(89, 1);
  for (int k = 0; k < 100; ++k) {
    const double g = 0.25 + 0.25 * (k % 4);
    const LossFamily& fam = make_loss((k % 2) ? LossKind::kLsre : LossKind::kLpre);
    const GammaObjective obj(fam, g, data);
    Eigen::VectorXd bt(3), bb(3);
    for (int j = 0; j < 3; ++j) {
      bt[j] = 0.6 + 0.5 * rng.normal();
      bb[j] = bt[j] + 0.8 * rng.normal();
    }
    const auto m1 = majorizer_ell1(obj, bt);
    const auto m2 = majorizer_ell2(obj, bt);
    const ObjectiveValue v = obj.eval(bb);
    CHECK(m1.value(bb) - v.ell1 >= -1e-10);
    CHECK(m2.value(bb) - v.ell2 >= -1e-10);
  }
}

TEST_CASE("surrogate hessians are positive semidefinite", "[estimator]") {
  const Dataset data = testutil::model1_data(91, 30);
  RngStream rng(93, 1);
  for (int k = 0; k < 50; ++k) {
    const double g = 0.5 * (1 + k % 2);
    const LossFamily& fam = make_loss((k % 2) ? LossKind::kLsre : LossKind::kLpre);
    const GammaObjective obj(fam, g, data);
    Eigen::VectorXd bt(3), bb(3);
    for (int j = 0; j < 3; ++j) {
      bt[j] = 0.6 + 0.4 * rng.normal();
      bb[j] = bt[j] + 0.5 * rng.normal();
    }
    const auto m1 = majorizer_ell1(obj, bt);
    const auto m2 = majorizer_ell2(obj, bt);
    CHECK(min_eigenvalue(m1.hessian(bb)) >= -1e-10);
    CHECK(min_eigenvalue(m2.hessian()) >= -1e-12);
  }
}

TEST_CASE("at gamma 0 the first surrogate equals the objective everywhere", "[estimator]") {
  const Dataset data = testutil::model1_data(95, 25);
  const GammaObjective obj(make_loss(LossKind::kLpre), 0.0, data);
  Eigen::VectorXd bt = Eigen::VectorXd::Constant(3, 0.4);
  const auto m1 = majorizer_ell1(obj, bt);
  const auto m2 = majorizer_ell2(obj, bt);
  RngStream rng(97, 1);
  for (int k = 0; k < 10; ++k) {
    Eigen::VectorXd b(3);
    for (int j = 0; j < 3; ++j) b[j] = 0.8 * rng.normal();
    const ObjectiveValue v = obj.eval(b);
    CHECK(std::abs(m1.value(b) - v.ell1) <= 1e-12 * (1.0 + std::abs(v.ell1)));
    CHECK(m2.value(b) == 0.0);
    CHECK(m2.gradient(b).norm() == 0.0);
    CHECK(m2.hessian().norm() == 0.0);
  }
}

TEST_CASE("one mm step descends and fixes the optimum", "[estimator]") {
  const Dataset data = testutil::model1_data(99, 20);
  const GammaObjective obj(make_loss(LossKind::kLpre), 0.5, data);
  Coefficients at_min = fit(obj, default_beta0(data)).beta_hat;
  for (int i = 0; i < 400; ++i) {
    const Coefficients next = mm_step(obj, at_min);
    const double moved = (next - at_min).lpNorm<Eigen::Infinity>();
    at_min = next;
    if (moved < 1e-11) break;
  }

  const Coefficients stay = mm_step(obj, at_min);
  CHECK((stay - at_min).lpNorm<Eigen::Infinity>() < 1e-8);

  RngStream rng(101, 1);
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd b(3);
    for (int j = 0; j < 3; ++j) b[j] = 1.5 * rng.normal();
    const Coefficients next = mm_step(obj, b);
    CHECK(obj.eval(next).total <= obj.eval(b).total + 1e-12);
  }
}

TEST_CASE("gamma 0 mm agrees with direct convex minimization", "[estimator]") {
  for (int s = 0; s < 20; ++s) {
    const Dataset data = testutil::model1_data(200 + s, 60);
    const GammaObjective obj(make_loss(LossKind::kLpre), 0.0, data);
    const FitResult r = fit(obj, default_beta0(data));
    const Eigen::VectorXd ref = newton_reference(data);
    CHECK((r.beta_hat - ref).lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("default start point centers the intercept", "[estimator]") {
  Eigen::MatrixXd x(3, 2);
  x << 1.0, 0.5, 1.0, -1.0, 1.0, 0.2;
  Eigen::VectorXd y(3);
  y << 1.0, 2.0, 4.0;
  const Dataset with_intercept(x, y, true);
  const Eigen::VectorXd b0 = default_beta0(with_intercept);
  CHECK(std::abs(b0[0] - (std::log(1.0) + std::log(2.0) + std::log(4.0)) / 3.0) < 1e-14);
  CHECK(b0[1] == 0.0);

  const Dataset no_intercept(x.col(1), y, false);
  CHECK(default_beta0(no_intercept).norm() == 0.0);
}

TEST_CASE("fit converges from the default start on many random instances", "[estimator]") {
  RngStream rng(103, 1);
  MmConfig cfg;
  cfg.mode = FitMode::kHybrid;
  int failures = 0;
  for (int k = 0; k < 1000; ++k) {
    const Dataset data = testutil::lognormal_data(rng, 40, 3, 0.4);
    const double g = 0.35 * (k % 3);
    const GammaObjective obj(make_loss((k % 2) ? LossKind::kLsre : LossKind::kLpre), g, data);
    const FitResult r = fit(obj, default_beta0(data), cfg);
    if (!r.trace.converged || !r.beta_hat.allFinite()) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("mm and hybrid modes reach the same objective", "[estimator]") {
  for (int s = 0; s < 5; ++s) {
    const Dataset data = testutil::model1_data(300 + s, 100, 0.1);
    const GammaObjective obj(make_loss(LossKind::kLpre), 0.5, data);
    MmConfig hybrid;
    hybrid.mode = FitMode::kHybrid;
    const FitResult a = fit(obj, default_beta0(data));
    const FitResult b = fit(obj, default_beta0(data), hybrid);
    CHECK(std::abs(a.objective - b.objective) < 1e-6);
  }
}

TEST_CASE("row order does not change the fitted objective", "[estimator]") {
  const Dataset data = testutil::model1_data(310, 50);
  Eigen::MatrixXd xr(data.n(), data.p());
  Eigen::VectorXd yr(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    xr.row(i) = data.X.row(data.n() - 1 - i);
    yr[i] = data.y[data.n() - 1 - i];
  }
  const Dataset rev(xr, yr, false);
  const GammaObjective obj(make_loss(LossKind::kLpre), 0.5, data);
  const GammaObjective obj_rev(make_loss(LossKind::kLpre), 0.5, rev);
  const FitResult a = fit(obj, default_beta0(data));
  const FitResult b = fit(obj_rev, default_beta0(rev));
  CHECK(std::abs(a.objective - b.objective) < 1e-12);
  CHECK((a.beta_hat - b.beta_hat).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("converged fits satisfy the stationarity gate", "[estimator]") {
  const Dataset data = testutil::model1_data(320, 100);
  for (double g : {0.0, 0.5, 1.0}) {
    MmConfig cfg;
    cfg.mode = FitMode::kHybrid;
    const GammaObjective obj(make_loss(LossKind::kLpre), g, data);
    const FitResult r = fit(obj, default_beta0(data), cfg);
    REQUIRE(r.trace.converged);
    CHECK(r.grad_norm <= 1e-4);
    CHECK(r.trace.objective_per_iter.size() ==
          static_cast<std::size_t>(r.trace.iterations) + 1);
  }
}

TEST_CASE("mm iterates never increase the objective", "[estimator]") {
  const Dataset data = testutil::model1_data(330, 60, 0.15);
  const GammaObjective obj(make_loss(LossKind::kLsre), 0.7, data);
  const FitResult r = fit(obj, default_beta0(data));
  const auto& path = r.trace.objective_per_iter;
  REQUIRE(path.size() >= 2);
  for (std::size_t i = 1; i < path.size(); ++i) CHECK(path[i] <= path[i - 1] + 1e-12);
}

TEST_CASE("clean gamma 0 fits recover the generating coefficients", "[estimator]") {
  std::vector<double> mse;
  for (int s = 0; s < 100; ++s) {
    const Dataset data = testutil::model1_data(400 + s, 200);
    const GammaObjective obj(make_loss(LossKind::kLpre), 0.0, data);
    const FitResult r = fit(obj, default_beta0(data));
    mse.push_back((r.beta_hat - Eigen::VectorXd::Ones(3)).squaredNorm());
  }
  CHECK(percentile(mse, 0.5) < 0.05);
}

TEST_CASE("fit configuration is validated", "[estimator]") {
  MmConfig cfg;
  cfg.max_iter = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = MmConfig{};
  cfg.tol_beta = -1.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = MmConfig{};
  cfg.inner.line_search_shrink = 1.5;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
}
