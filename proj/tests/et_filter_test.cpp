#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace etpareto;
using etpareto::testing::eye;
using etpareto::testing::identity_system;
using etpareto::testing::PlainKf;

namespace {

FilterParams scalar_system(double q = 0.0049, double r = 0.0009) {
  return {Matrix{{1.0}}, Matrix{{1.0}}, Matrix{{1.0}}, Matrix{{q}}, Matrix{{r}}};
}

FilterState state_with(Vec mean, Matrix cov) { return {{std::move(mean), std::move(cov)}, 0, 0, EstimatorMode::ET}; }

Matrix random_spd(std::size_t n, double scale, RngStream& rng) {
  Matrix a(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) a(r, c) = rng.uniform() - 0.5;
  return (a * a.transpose() + Matrix::identity(n, 0.1)) * scale;
}

bool psd(const Matrix& m, double tol) { return min_eigenvalue(m.symmetrized()) >= -tol; }

}  // namespace

TEST(Predict, ZeroPriorCovariance) {
  const FilterParams p = identity_system(2);
  const FilterState s = predict(state_with({0, 0}, Matrix(2, 2)), {1, 0}, p);
  EXPECT_EQ(s.belief.mean, (Vec{1, 0}));
  EXPECT_NEAR(max_abs_diff(s.belief.cov, eye(2, 0.0049)), 0.0, 1e-18);
  EXPECT_EQ(s.step_in_segment, 1u);
}

TEST(Predict, ZeroInputAddsQ) {
  const FilterParams p = identity_system(2);
  const Matrix p0{{0.01, 0.002}, {0.002, 0.03}};
  const FilterState s = predict(state_with({0.3, -1.2}, p0), {0, 0}, p);
  EXPECT_EQ(s.belief.mean, (Vec{0.3, -1.2}));
  EXPECT_NEAR(max_abs_diff(s.belief.cov, p0 + p.Q), 0.0, 1e-18);
}

TEST(Predict, ScalarSteadyState) {
  const FilterState s = predict(state_with({0}, Matrix{{7.768e-4}}), {0}, scalar_system());
  EXPECT_NEAR(s.belief.cov(0, 0), 5.677e-3, 1e-6);
  EXPECT_THROW(predict(state_with({0, 0}, eye(2)), {0}, identity_system(2)), InputError);
}

TEST(DecideTrigger, ZeroInnovationNeverTriggers) {
  const FilterParams p = scalar_system();
  const FilterState s = state_with({0.4}, Matrix{{5.677e-3}});
  for (double d : {0.0, 0.5, 2.0}) {
    const TriggerDecision t = decide_trigger(s, {0.4}, d, p);
    EXPECT_FALSE(t.gamma);
    EXPECT_EQ(t.epsilon[0], 0.0);
  }
}

TEST(DecideTrigger, ScalarHandArithmetic) {
  const FilterParams p = scalar_system();
  const FilterState s = state_with({0.0}, Matrix{{5.677e-3}});
  const TriggerDecision big = decide_trigger(s, {0.5}, 2.0, p);
  EXPECT_NEAR(big.innovation_cov(0, 0), 6.577e-3, 1e-12);
  EXPECT_NEAR(big.epsilon[0], 0.5 / std::sqrt(6.577e-3), 1e-9);
  EXPECT_NEAR(big.epsilon[0], 6.166, 1e-3);
  EXPECT_TRUE(big.gamma);
  const TriggerDecision small = decide_trigger(s, {0.1}, 2.0, p);
  EXPECT_NEAR(small.epsilon[0], 1.233, 1e-3);
  EXPECT_FALSE(small.gamma);
  EXPECT_TRUE(decide_trigger(s, {0.1}, 1.0, p).gamma);
}

TEST(DecideTrigger, BoundaryDoesNotTrigger) {
  const FilterParams p = scalar_system(0.0, 1.0);
  const FilterState s = state_with({0.0}, Matrix{{3.0}});
  // Z = 4, so z = 2 whitens to exactly 1
  EXPECT_FALSE(decide_trigger(s, {2.0}, 1.0, p).gamma);
  EXPECT_TRUE(decide_trigger(s, {2.0}, 0.999, p).gamma);
}

TEST(DecideTrigger, DeltaZeroTriggersOnAnyInnovation) {
  const FilterParams p = scalar_system();
  const FilterState s = state_with({0.0}, Matrix{{5.677e-3}});
  EXPECT_TRUE(decide_trigger(s, {1e-12}, 0.0, p).gamma);
}

TEST(KalmanGain, Examples) {
  const FilterParams p = scalar_system();
  EXPECT_EQ(kalman_gain(Matrix{{0.0}}, p)(0, 0), 0.0);
  EXPECT_NEAR(kalman_gain(Matrix{{5.677e-3}}, p)(0, 0), 5.677e-3 / (5.677e-3 + 9e-4), 1e-12);
  EXPECT_NEAR(kalman_gain(Matrix{{5.677e-3}}, p)(0, 0), 0.8632, 1e-3);
  const FilterParams deaf = identity_system(2, 0.0049, 1e9);
  const Matrix k = kalman_gain(eye(2, 5.677e-3), deaf);
  EXPECT_LT(k.frobenius(), 1e-8);
}

TEST(GLambda, Examples) {
  const FilterParams p = scalar_system();
  const Matrix pm{{5.677e-3}};
  EXPECT_TRUE(g_lambda(pm, 0.0, p) == pm);
  EXPECT_NEAR(g_lambda(pm, 1.0, p)(0, 0), 5.677e-3 * 9e-4 / (5.677e-3 + 9e-4), 1e-15);
  EXPECT_NEAR(g_lambda(pm, 1.0, p)(0, 0), 7.768e-4, 1e-6);
  const Matrix two_r{{1.8e-3}};
  EXPECT_NEAR(g_lambda(two_r, 0.5, p)(0, 0), 1.8e-3 * 2.0 / 3.0, 1e-15);
  EXPECT_THROW(g_lambda(pm, 1.5, p), InputError);
  EXPECT_THROW(g_lambda(pm, -0.1, p), InputError);
}

TEST(Update, ImplicitLimits) {
  const FilterParams p = identity_system(2);
  const FilterState pred = state_with({0.2, 0.1}, eye(2, 5.677e-3));
  TriggerDecision quiet;
  quiet.gamma = false;
  const FilterState tiny = update(pred, quiet, 1e-6, p);
  EXPECT_LT(max_abs_diff(tiny.belief.cov, g_lambda(pred.belief.cov, 1.0, p)), 1e-5);
  EXPECT_EQ(tiny.belief.mean, pred.belief.mean);
  EXPECT_EQ(tiny.triggers_in_segment, 0u);
  const FilterState wide = update(pred, quiet, 5.0, p);
  EXPECT_LT(max_abs_diff(wide.belief.cov, pred.belief.cov) / pred.belief.cov.max_abs(), 1e-3);
}

TEST(Update, ExplicitCountsTrigger) {
  const FilterParams p = identity_system(2);
  const FilterState pred = state_with({0, 0}, eye(2, 5.677e-3));
  const TriggerDecision d = forced_trigger(pred, {0.1, -0.1}, p);
  const FilterState post = update(pred, d, 1.0, p);
  EXPECT_EQ(post.triggers_in_segment, 1u);
  const double k = 5.677e-3 / (5.677e-3 + 9e-4);
  EXPECT_NEAR(post.belief.mean[0], 0.1 * k, 1e-15);
  EXPECT_NEAR(post.belief.mean[1], -0.1 * k, 1e-15);
}

TEST(Update, FullTriggerMatchesPlainKalmanFilter) {
  RngStream rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 3);
    FilterParams m;
    m.F = Matrix::identity(n, 0.9) + random_spd(n, 0.05, rng);
    m.G = Matrix::identity(n);
    m.H = Matrix::identity(n);
    m.Q = random_spd(n, 0.01, rng);
    m.R = random_spd(n, 0.005, rng);
    const Matrix p0 = random_spd(n, 0.02, rng);
    FilterState f = state_with(Vec(n, 0.0), p0);
    PlainKf kf{Vec(n, 0.0), p0};
    const GaussianSampler w(m.Q), v(m.R);
    Vec x(n, 0.0);
    for (int k = 0; k < 100; ++k) {
      Vec u(n);
      for (double& c : u) c = 0.1 * (rng.uniform() - 0.5);
      x = m.F * x + m.G * u + w.noise(rng);
      const Vec y = m.H * x + v.noise(rng);
      const FilterState pred = predict(f, u, m);
      f = update(pred, forced_trigger(pred, y, m), 0.0, m);
      kf.step(m, u, y);
      ASSERT_LT(max_abs_diff(f.belief.cov, kf.p), 1e-12);
      for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(f.belief.mean[i], kf.x[i], 1e-12);
    }
  }
}

TEST(Update, DeltaZeroTriggersEveryStep) {
  const FilterParams m = identity_system(2);
  RngStream rng(8);
  FilterState f = state_with({0, 0}, eye(2, 0.002));
  PlainKf kf{{0, 0}, eye(2, 0.002)};
  const GaussianSampler w(m.Q), v(m.R);
  Vec x{0, 0};
  for (int k = 0; k < 200; ++k) {
    x = x + w.noise(rng);
    const Vec y = x + v.noise(rng);
    const FilterState pred = predict(f, {0, 0}, m);
    const TriggerDecision d = decide_trigger(pred, y, 0.0, m);
    ASSERT_TRUE(d.gamma);
    f = update(pred, d, 0.0, m);
    kf.step(m, {0, 0}, y);
    ASSERT_LT(max_abs_diff(f.belief.cov, kf.p), 1e-12);
  }
  EXPECT_EQ(f.triggers_in_segment, 200u);
}

TEST(Update, CovarianceOrderingOnDeltaGrid) {
  RngStream rng(4);
  for (int t = 0; t < 10; ++t) {
    const FilterParams m{eye(2), eye(2), eye(2), eye(2, 0.0049), random_spd(2, 0.002, rng)};
    const Matrix pm = random_spd(2, 0.01, rng);
    const Matrix g1 = g_lambda(pm, 1.0, m);
    for (double d = 0.1; d <= 5.0; d += 0.1) {
      const Matrix gb = g_lambda(pm, beta_coefficient(d), m);
      EXPECT_TRUE(psd(gb - g1, 1e-15));
      EXPECT_TRUE(psd(pm - gb, 1e-15));
      EXPECT_TRUE(psd(gb, 1e-10));
      EXPECT_LE(gb.asymmetry(), 0.0);
    }
  }
}

TEST(SteadyState, ScalarClosedForm) {
  const double q = 0.0049, r = 0.0009;
  const double prior = (q + std::sqrt(q * q + 4 * q * r)) / 2;
  const double post = prior * r / (prior + r);
  const SteadyStateCovariance ss = steady_state_kf_covariance(scalar_system(q, r));
  EXPECT_NEAR(ss.posterior(0, 0), post, 1e-12);
  EXPECT_NEAR(ss.prior(0, 0), prior, 1e-12);
  EXPECT_NEAR(ss.posterior(0, 0), 7.768e-4, 1e-6);
  EXPECT_NEAR(ss.prior(0, 0), 5.677e-3, 1e-6);
}

TEST(SteadyState, EvaluationSystemDecouples) {
  const SteadyStateCovariance ss = steady_state_kf_covariance(identity_system(2, 0.07 * 0.07, 0.03 * 0.03));
  EXPECT_NEAR(ss.posterior(0, 0), 7.768e-4, 1e-6);
  EXPECT_NEAR(ss.posterior(1, 1), 7.768e-4, 1e-6);
  EXPECT_NEAR(ss.posterior(0, 1), 0.0, 1e-15);
}

TEST(SteadyState, NoProcessNoiseGoesToZero) {
  const SteadyStateCovariance ss = steady_state_kf_covariance(scalar_system(0.0, 0.0009));
  EXPECT_LT(ss.posterior(0, 0), 1e-6);
}

TEST(SteadyState, ReportsNonConvergence) {
  EXPECT_THROW(steady_state_kf_covariance(scalar_system(), 1e-12, 2), ConvergenceError);
}
