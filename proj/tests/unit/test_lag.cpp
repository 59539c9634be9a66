#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "relerr/lag.hpp"

using namespace relerr;

TEST_CASE("daily lags line up with the hand construction", "[lag]") {
  const std::vector<double> series{1.0, 2.0, 3.0, 4.0, 5.0};
  const LagData lagged = make_lag_data(series, LagSpec{1, 2, 0});
  REQUIRE(lagged.data.n() == 3);
  REQUIRE(lagged.data.p() == 2);
  CHECK(lagged.data.y[0] == 3.0);
  CHECK(lagged.data.X(0, 0) == 2.0);
  CHECK(lagged.data.X(0, 1) == 1.0);
  CHECK(lagged.data.y[2] == 5.0);
  CHECK(lagged.data.X(2, 0) == 4.0);
  CHECK(lagged.data.X(2, 1) == 3.0);
  CHECK(lagged.target_index == std::vector<Eigen::Index>{2, 3, 4});
  CHECK(!lagged.data.has_intercept);
}

TEST_CASE("seasonal lags start after d times q observations", "[lag]") {
  std::vector<double> series(500);
  for (std::size_t i = 0; i < series.size(); ++i) series[i] = 1.0 + static_cast<double>(i);
  const LagSpec spec{96, 5, 0};
  const LagData lagged = make_lag_data(series, spec);
  REQUIRE(lagged.data.n() == 20);
  REQUIRE(lagged.data.p() == 5);
  CHECK(lagged.target_index[0] == 480);  // 1-based position 481
  CHECK(lagged.data.y[0] == series[480]);
  for (int k = 1; k <= 5; ++k) CHECK(lagged.data.X(0, k - 1) == series[480 - 96 * k]);
}

TEST_CASE("an intercept column can be prepended", "[lag]") {
  const std::vector<double> series{1.0, 2.0, 3.0, 4.0, 5.0};
  const Dataset data = make_lag_matrix(series, LagSpec{1, 2, 0}, true);
  REQUIRE(data.p() == 3);
  CHECK(data.has_intercept);
  CHECK(data.X.col(0).isOnes());
  CHECK(data.X(0, 1) == 2.0);
  CHECK(data.X(0, 2) == 1.0);
}

TEST_CASE("nonpositive or missing values are named by index", "[lag]") {
  std::vector<double> series(20, 1.5);
  series[6] = 0.0;
  CHECK_THROWS_WITH(make_lag_matrix(series, LagSpec{1, 2, 0}),
                    Catch::Matchers::ContainsSubstring("index 7"));
  series[6] = -2.0;
  CHECK_THROWS_AS(make_lag_matrix(series, LagSpec{1, 2, 0}), DataError);
  series[6] = std::nan("");
  CHECK_THROWS_WITH(make_lag_matrix(series, LagSpec{1, 2, 0}),
                    Catch::Matchers::ContainsSubstring("index 7"));
}

TEST_CASE("lag specs validate their geometry", "[lag]") {
  CHECK_THROWS_AS((LagSpec{0, 2, 0}).validate(), DomainError);
  CHECK_THROWS_AS((LagSpec{1, 0, 0}).validate(), DomainError);
  CHECK_THROWS_AS((LagSpec{4, 3, 12}).validate(), DomainError);
  CHECK_NOTHROW((LagSpec{4, 3, 13}).validate());
  CHECK_NOTHROW((LagSpec{4, 3, 0}).validate());

  const std::vector<double> shorty(8, 1.0);
  CHECK_THROWS_AS(make_lag_matrix(shorty, LagSpec{4, 2, 0}), DataError);
}
