#include <gtest/gtest.h>

#include <cmath>

#include "gridcast/arma.hpp"
#include "test_common.hpp"

using namespace gridcast;
using testutil::simulate_arma;

TEST(ArmaFit, RecoversAr1) {
  const auto x = simulate_arma({0.8}, {}, 0.1, 5000, 101);
  const ArmaModel m = fit_arma(x, 1, 0);
  ASSERT_EQ(m.phi.size(), 1u);
  EXPECT_GE(m.phi[0], 0.75);
  EXPECT_LE(m.phi[0], 0.85);
  EXPECT_NEAR(m.noise_variance, 0.01, 0.002);
  EXPECT_FALSE(m.near_unit_root);
}

TEST(ArmaFit, WhiteNoise) {
  const auto x = simulate_arma({}, {}, 1.0, 5000, 202);
  const ArmaModel m = fit_arma(x, 1, 0);
  EXPECT_LT(std::abs(m.phi[0]), 0.05);
}

TEST(ArmaFit, RecoversArma21) {
  const auto x = simulate_arma({0.5, -0.3}, {0.4}, 0.1, 5000, 303);
  const ArmaModel m = fit_arma(x, 2, 1);
  ASSERT_EQ(m.phi.size(), 2u);
  ASSERT_EQ(m.theta.size(), 1u);
  EXPECT_NEAR(m.phi[0], 0.5, 0.1);
  EXPECT_NEAR(m.phi[1], -0.3, 0.1);
  EXPECT_NEAR(m.theta[0], 0.4, 0.1);
  EXPECT_GE(m.noise_variance, 0.0);
  EXPECT_GE(m.tail_values.size(), 2u);
  EXPECT_GE(m.tail_residuals.size(), 1u);
  EXPECT_EQ(m.long_ar_order, 20u);
}

TEST(ArmaFit, NearUnitRootIsFlaggedNotRejected) {
  const auto x = simulate_arma({1.0}, {}, 0.1, 2000, 404);
  const ArmaModel m = fit_arma(x, 1, 0);
  EXPECT_TRUE(m.near_unit_root);
}

TEST(ArmaFit, Errors) {
  std::vector<double> x(29, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.3 * static_cast<double>(i));
  try {
    fit_arma(x, 1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SeriesTooShort);
  }
  const std::vector<double> flat(200, 1.0);
  try {
    fit_arma(flat, 1, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SingularNormalEquations);
  }
}

TEST(ArmaFit, Deterministic) {
  const auto x = simulate_arma({0.5, -0.3}, {0.4}, 0.1, 3000, 505);
  EXPECT_EQ(fit_arma(x, 2, 1), fit_arma(x, 2, 1));
}

TEST(ArmaFit, ResidualMeanIsSmall) {
  const auto x = simulate_arma({0.6}, {0.3}, 0.5, 5000, 606, 0.2);
  const ArmaModel m = fit_arma(x, 1, 1);
  double mean = 0.0, sd = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  for (double v : x) sd += (v - mean) * (v - mean);
  sd = std::sqrt(sd / static_cast<double>(x.size() - 1));
  // one-step residuals from the filter over the training data
  double rsum = 0.0;
  std::vector<double> e(x.size(), 0.0);
  for (std::size_t t = 1; t < x.size(); ++t) {
    e[t] = x[t] - (m.intercept + m.phi[0] * x[t - 1] + m.theta[0] * e[t - 1]);
    rsum += e[t];
  }
  EXPECT_LE(std::abs(rsum / static_cast<double>(x.size() - 1)), 0.05 * sd);
}

TEST(SelectOrder, Ar1PicksAr) {
  const auto x = simulate_arma({0.8}, {}, 0.1, 3000, 707);
  EXPECT_GE(select_order(x, 3, 3).first, 1u);
}

TEST(SelectOrder, WhiteNoisePicksSmallest) {
  const auto x = simulate_arma({}, {}, 1.0, 3000, 808);
  const auto [p, q] = select_order(x, 1, 1);
  EXPECT_EQ(p + q, 1u);
}

TEST(SelectOrder, EmptyGrid) {
  const auto x = simulate_arma({}, {}, 1.0, 500, 909);
  try {
    select_order(x, 0, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoFeasibleOrder);
  }
}

TEST(ArmaForecast, Ar1ClosedForm) {
  ArmaModel m;
  m.p = 1;
  m.phi = {0.5};
  m.tail_values = {1.0};
  const auto f = arma_forecast(m, 3);
  EXPECT_EQ(f, (std::vector<double>{0.5, 0.25, 0.125}));

  const std::vector<double> hist{0.3, -2.0, 1.0};
  const auto g = arma_forecast(m, hist, 3);
  EXPECT_EQ(g, f);
}

TEST(ArmaForecast, Ar1FittedMatchesPowerLaw) {
  const auto x = simulate_arma({0.8}, {}, 0.1, 5000, 111);
  ArmaModel m = fit_arma(x, 1, 0);
  m.intercept = 0.0;
  const double last = m.tail_values.back();
  const auto f = arma_forecast(m, 40);
  for (std::size_t h = 1; h <= 40; ++h)
    EXPECT_NEAR(f[h - 1], std::pow(m.phi[0], static_cast<double>(h)) * last, 1e-10);
}

TEST(ArmaForecast, MaMemoryRunsOut) {
  ArmaModel m;
  m.q = 1;
  m.theta = {0.7};
  m.tail_residuals = {1.0};
  const auto f = arma_forecast(m, 5);
  EXPECT_EQ(f, (std::vector<double>{0.7, 0, 0, 0, 0}));
}

TEST(ArmaForecast, InterceptOnly) {
  ArmaModel m;
  m.q = 1;
  m.theta = {0.0};
  m.intercept = 0.42;
  m.tail_residuals = {3.0};
  for (double v : arma_forecast(m, 7)) EXPECT_EQ(v, 0.42);
}

TEST(ArmaForecast, ConvergesToProcessMean) {
  const auto x = simulate_arma({0.5, 0.2}, {0.3}, 0.2, 5000, 222, 0.6);
  const ArmaModel m = fit_arma(x, 2, 1);
  ASSERT_LT(std::abs(m.phi[0] + m.phi[1]), 0.9);
  const auto f = arma_forecast(m, 500);
  EXPECT_NEAR(f.back(), m.process_mean(), 1e-6);
}

TEST(ArmaForecast, LengthAndErrors) {
  const auto x = simulate_arma({0.5}, {0.2}, 0.2, 1000, 333);
  const ArmaModel m = fit_arma(x, 1, 1);
  for (std::size_t h : {1u, 2u, 17u, 120u}) EXPECT_EQ(arma_forecast(m, h).size(), h);
  EXPECT_THROW(arma_forecast(m, std::span<const double>{}, 3), Error);
  const ArmaModel m3 = fit_arma(x, 3, 0);
  try {
    const std::vector<double> two{1.0, 2.0};
    arma_forecast(m3, two, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InsufficientHistory);
  }
}

TEST(ArmaForecast, HistoryOverloadMatchesTailOnTrainingData) {
  const auto x = simulate_arma({0.5, -0.3}, {0.4}, 0.1, 3000, 444);
  const ArmaModel m = fit_arma(x, 2, 1);
  const auto a = arma_forecast(m, 10);
  const auto b = arma_forecast(m, x, 10);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(a[i], b[i], 0.05);
}
