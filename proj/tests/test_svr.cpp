#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "gridcast/svr.hpp"
#include "oracles/qp_oracle.hpp"
#include "test_common.hpp"

using namespace gridcast;

namespace {

// 8 points on a line, 1-D inputs
SupervisedSet toy_set() {
  const std::vector<double> x{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5};
  const std::vector<double> y{0.1, 0.6, 0.95, 0.85, 0.3, -0.2, -0.75, -0.9};
  return SupervisedSet(x, y, 1, 1);
}

SupervisedSet random_set(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> in(n * dim), tg(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      in[i * dim + d] = rng.uniform(-1.0, 1.0);
      s += std::sin(2.0 * in[i * dim + d]);
    }
    tg[i] = s + 0.1 * rng.normal();
  }
  return SupervisedSet(std::move(in), std::move(tg), dim, 1);
}

Eigen::MatrixXd gram(const SupervisedSet& d, double gamma) {
  Eigen::MatrixXd K(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d.size(); ++j) K(i, j) = kernel_rbf(d.input(i), d.input(j), gamma);
  return K;
}

Eigen::VectorXd targets(const SupervisedSet& d) {
  return Eigen::Map<const Eigen::VectorXd>(d.targets().data(), static_cast<Eigen::Index>(d.size()));
}

}  // namespace

TEST(Kernel, Values) {
  const std::vector<double> a{1.0, 2.0}, b{2.0, 0.0};
  EXPECT_DOUBLE_EQ(kernel_rbf(a, b, 0.5), std::exp(-2.5));
  EXPECT_DOUBLE_EQ(kernel_rbf(a, a, 3.0), 1.0);
  EXPECT_DOUBLE_EQ(kernel_linear(a, b), 2.0);
  const std::vector<double> c{1.0};
  EXPECT_THROW(kernel_rbf(a, c, 1.0), Error);
}

TEST(Svr, MatchesQpOracleOnToy) {
  const SupervisedSet d = toy_set();
  SvrParams p;
  p.C = 1.0;
  p.epsilon = 0.1;
  p.gamma = 1.0;
  p.smo.tol = 1e-7;
  const SvrModel m = fit_svr(d, p);
  EXPECT_TRUE(m.converged);

  const oracle::QpSolution ref = oracle::solve_svr_dual(gram(d, 1.0), targets(d), 1.0, 0.1, 20000);
  EXPECT_NEAR(svr_dual_objective(m, d), ref.dual, 1e-6);

  const Eigen::MatrixXd K = gram(d, 1.0);
  for (double x = -0.5; x <= 4.0; x += 0.25) {
    const std::vector<double> in{x};
    double f = ref.bias;
    for (std::size_t i = 0; i < d.size(); ++i) f += ref.beta(i) * kernel_rbf(in, d.input(i), 1.0);
    EXPECT_NEAR(svr_predict(m, in), f, 1e-4) << "x=" << x;
  }
}

TEST(Svr, MatchesQpOracleOnRandomInstances) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SupervisedSet d = random_set(25, 2, seed);
    SvrParams p;
    p.C = 2.0;
    p.epsilon = 0.05;
    p.gamma = 0.7;
    p.smo.tol = 1e-10;
    const SvrModel m = fit_svr(d, p);
    const oracle::QpSolution ref = oracle::solve_svr_dual(gram(d, 0.7), targets(d), 2.0, 0.05, 50000);
    EXPECT_NEAR(svr_dual_objective(m, d), ref.dual, 1e-6) << "seed " << seed;
  }
}

TEST(Svr, ConstraintsAndKkt) {
  const SupervisedSet d = random_set(200, 3, 9);
  SvrParams p;
  p.C = 1.0;
  p.epsilon = 0.1;
  const SvrModel m = fit_svr(d, p);
  ASSERT_TRUE(m.converged);
  const auto beta = m.full_beta();
  EXPECT_NEAR(std::accumulate(beta.begin(), beta.end(), 0.0), 0.0, 1e-10);
  const double tol = 1e-3 + 1e-9;
  for (std::size_t i = 0; i < d.size(); ++i) {
    ASSERT_LE(std::abs(beta[i]), p.C);
    const double r = d.target(i) - svr_predict(m, d.input(i));
    if (beta[i] == 0.0) {
      EXPECT_LE(std::abs(r), p.epsilon + tol) << i;  // inside the tube
    } else if (std::abs(beta[i]) < p.C) {
      EXPECT_NEAR(std::abs(r), p.epsilon, tol) << i;  // on the tube boundary
      EXPECT_GT(r * beta[i], 0.0);
    } else {
      EXPECT_GE(r * (beta[i] > 0 ? 1.0 : -1.0), p.epsilon - tol) << i;  // outside or on
    }
  }
}

TEST(Svr, ConstantTargetsGiveConstantPrediction) {
  std::vector<double> in{0.0, 1.0, 2.0, 3.0, 4.0};
  std::vector<double> tg(5, 2.5);
  const SupervisedSet d(in, tg, 1, 1);
  const SvrModel m = fit_svr(d, {});
  EXPECT_TRUE(m.support_beta.empty());
  const std::vector<double> x{1.7};
  EXPECT_NEAR(svr_predict(m, x), 2.5, 0.1 + 1e-12);
}

TEST(Svr, EarlyStopKeepsFeasibility) {
  const SupervisedSet d = random_set(150, 2, 21);
  SvrParams p;
  p.C = 0.5;
  p.smo.max_iters = 7;
  p.smo.record_trace = true;
  const SvrModel m = fit_svr(d, p);
  EXPECT_FALSE(m.converged);
  EXPECT_EQ(m.iterations, 7u);
  const auto beta = m.full_beta();
  EXPECT_NEAR(std::accumulate(beta.begin(), beta.end(), 0.0), 0.0, 1e-12);
  for (double b : beta) EXPECT_LE(std::abs(b), p.C);
}

TEST(Svr, ObjectiveTraceNeverDecreases) {
  const SupervisedSet d = random_set(120, 4, 33);
  SvrParams p;
  p.smo.record_trace = true;
  p.smo.tol = 1e-6;
  const SvrModel m = fit_svr(d, p);
  ASSERT_FALSE(m.objective_trace.empty());
  EXPECT_GE(m.objective_trace.front(), 0.0);
  for (std::size_t i = 1; i < m.objective_trace.size(); ++i)
    ASSERT_GE(m.objective_trace[i], m.objective_trace[i - 1]) << i;
  EXPECT_NEAR(m.objective_trace.back(), svr_dual_objective(m, d), 1e-8);
}

TEST(Svr, UncachedKernelMatchesCached) {
  const SupervisedSet d = random_set(80, 2, 44);
  SvrParams p;
  const SvrModel a = fit_svr(d, p);
  p.smo.cache_limit = 10;
  const SvrModel b = fit_svr(d, p);
  EXPECT_EQ(a, b);
}

TEST(Svr, PredictionIsContinuous) {
  const SupervisedSet d = random_set(60, 2, 55);
  const SvrModel m = fit_svr(d, {});
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double f0 = svr_predict(m, x);
    x[0] += 1e-7;
    EXPECT_NEAR(svr_predict(m, x), f0, 1e-5);
  }
}

TEST(Svr, DefaultGammaIsInverseWindow) {
  const SupervisedSet d = random_set(30, 5, 66);
  EXPECT_DOUBLE_EQ(fit_svr(d, {}).gamma, 0.2);
}

TEST(Svr, Errors) {
  const SupervisedSet d = random_set(10, 2, 1);
  SvrParams p;
  p.C = 0.0;
  EXPECT_THROW(fit_svr(d, p), Error);
  const SupervisedSet empty(std::vector<double>{}, std::vector<double>{}, 2, 1);
  EXPECT_THROW(fit_svr(empty, {}), Error);
  const SvrModel m = fit_svr(d, {});
  const std::vector<double> x{1.0};
  try {
    svr_predict(m, x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionMismatch);
  }
}

TEST(Svr, Deterministic) {
  const SupervisedSet d = random_set(100, 3, 77);
  EXPECT_EQ(fit_svr(d, {}), fit_svr(d, {}));
}
