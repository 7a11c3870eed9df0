#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "synergy/model.hpp"
#include "synergy/sysid.hpp"

namespace synergy {
namespace {

std::vector<SteadyStateSample> exact_samples(const std::vector<double>& lambda, const std::vector<double>& thetas) {
  std::vector<SteadyStateSample> s;
  for (double t : thetas) s.push_back({t, lambda[0] * t * t + lambda[1] * t + lambda[2], 0.0, 1});
  return s;
}

// Over-damped generator with real poles p1, p2 in (0, 1) and unity gain.
AdaptationDynamics overdamped(double p1, double p2, double b1_share) {
  const double a1 = -(p1 + p2);
  const double a2 = p1 * p2;
  const double dc = 1.0 + a1 + a2;
  const double b1 = b1_share * dc;
  const double b2 = dc - b1;
  Eigen::Matrix2d phi;
  phi << 0.0, 1.0, -a2, -a1;
  const Eigen::Vector2d gamma(b1, b2 - a1 * b1);
  return AdaptationDynamics(phi, gamma, Eigen::RowVector2d(1.0, 0.0));
}

double step_mse(const AdaptationDynamics& a, const AdaptationDynamics& b, int n = 100) {
  const std::vector<double> u(static_cast<std::size_t>(n), 1.0);
  const auto ya = simulate_lti(a, Eigen::VectorXd(), u);
  const auto yb = simulate_lti(b, Eigen::VectorXd(), u);
  double s = 0.0;
  for (std::size_t i = 0; i < ya.size(); ++i) s += (ya[i] - yb[i]) * (ya[i] - yb[i]);
  return s / n;
}

std::vector<double> poles_of(const AdaptationDynamics& d) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(d.phi(), false);
  std::vector<double> p;
  for (const auto& ev : es.eigenvalues()) {
    EXPECT_NEAR(ev.imag(), 0.0, 1e-6);  // a repeated pole splits by ~sqrt(eps)
    p.push_back(ev.real());
  }
  return p;
}

TEST(PreferenceFit, RecoversSubjectAExactly) {
  const std::vector<double> lam{-158.15, 529.18, -293.34};
  const auto fit = fit_preference_map(exact_samples(lam, {0.8, 1.2, 1.6, 2.0, 2.4}));
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(fit.map.lambda[static_cast<std::size_t>(k)], lam[static_cast<std::size_t>(k)], 1e-9);
  EXPECT_TRUE(fit.concave);
}

TEST(PreferenceFit, ConstantData) {
  const auto fit = fit_preference_map(exact_samples({0, 0, 12.5}, {0.8, 1.0, 1.7, 2.4}));
  EXPECT_NEAR(fit.map.lambda[0], 0.0, 1e-9);
  EXPECT_NEAR(fit.map.lambda[1], 0.0, 1e-9);
  EXPECT_NEAR(fit.map.lambda[2], 12.5, 1e-9);
  EXPECT_FALSE(fit.concave);  // flagged, not rejected
}

TEST(PreferenceFit, PerturbedSubjectB) {
  const std::vector<double> lam{-96.18, 342.13, -147.86};
  auto s = exact_samples(lam, {0.8, 1.2, 1.6, 2.0, 2.4});
  const double eps[] = {1e-3, -1e-3, 1e-3, -1e-3, 1e-3};
  for (std::size_t i = 0; i < s.size(); ++i) s[i].mean_performance += eps[i];
  const auto fit = fit_preference_map(s);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(fit.map.lambda[k], lam[k], 1e-1);
}

TEST(PreferenceFit, RankDeficientThrows) {
  EXPECT_THROW(fit_preference_map(exact_samples({-1, 0, 0}, {1.0, 1.0, 2.0, 2.0})), std::invalid_argument);
}

TEST(LtiFit, RecoversOverdampedStepResponse) {
  const auto gen = overdamped(0.6, 0.3, 0.7);
  std::vector<double> u(120, 1.0);
  for (std::size_t i = 60; i < u.size(); ++i) u[i] = 3.0;
  const auto j = simulate_lti(gen, Eigen::VectorXd(), u);
  LtiFitOptions o;
  o.order = 2;
  const LtiFit fit = fit_adaptation_lti(u, j, o);
  EXPECT_LT(step_mse(gen, fit.dynamics), 1e-6);
  EXPECT_LT(fit.mse, 1e-6);
  EXPECT_NEAR(steady_state_gain(fit.dynamics), 1.0, 1e-6);
  EXPECT_FALSE(fit.at_constraint);
}

TEST(LtiFit, PolesAreRealAndInsideUnitInterval) {
  // Subject A's reference matrices have a negative pole; the fit must still
  // return an over-damped model.
  auto spec = reference_subject_a();
  spec.noise.seed = 3;
  SimulatedSubject s(spec);
  std::vector<double> u;
  std::vector<double> j;
  for (int i = 0; i < 120; ++i) {
    const double th = 0.8 + (i / 30) * 0.4;
    u.push_back(eval_preference(spec.map, th));
    j.push_back(s.step(th));
  }
  for (int order : {2, 3}) {
    LtiFitOptions o;
    o.order = order;
    const LtiFit fit = fit_adaptation_lti(u, j, o);
    for (double p : poles_of(fit.dynamics)) {
      EXPECT_GT(p, 0.0);
      EXPECT_LT(p, 1.0);
    }
    EXPECT_NEAR(steady_state_gain(fit.dynamics), 1.0, 1e-6);
  }
}

TEST(LtiFit, StaticDataGivesZeroError) {
  const std::vector<double> u(40, 7.0);
  const LtiFit fit = fit_adaptation_lti(u, u);
  EXPECT_NEAR(steady_state_gain(fit.dynamics), 1.0, 1e-9);
  EXPECT_NEAR(fit.mse, 0.0, 1e-9);
}

TEST(LtiFit, OrderThreeNeverWorseThanOrderTwo) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 15.0);
  const auto gen = overdamped(0.7, 0.2, 0.5);
  std::vector<double> u;
  for (int i = 0; i < 100; ++i) u.push_back(80.0 + 40.0 * std::sin(0.2 * i));
  auto j = simulate_lti(gen, Eigen::VectorXd(), u);
  for (double& v : j) v += n(rng);
  LtiFitOptions o2;
  o2.order = 2;
  LtiFitOptions o3;
  o3.order = 3;
  EXPECT_LE(fit_adaptation_lti(u, j, o3).mse, fit_adaptation_lti(u, j, o2).mse);
}

TEST(LtiFit, RejectsShortOrMismatchedData) {
  std::vector<double> u(15, 1.0);
  EXPECT_THROW(fit_adaptation_lti(u, u), std::invalid_argument);
  std::vector<double> v(40, 1.0);
  std::vector<double> w(39, 1.0);
  EXPECT_THROW(fit_adaptation_lti(v, w), std::invalid_argument);
}

TEST(LtiFit, BoundaryOptimumIsFlagged) {
  // A pure delay (pole at 0) lies outside the open interval.
  std::vector<double> u;
  for (int i = 0; i < 60; ++i) u.push_back(i % 7 < 3 ? 1.0 : -2.0);
  std::vector<double> j(u.size(), 0.0);
  for (std::size_t i = 1; i < u.size(); ++i) j[i] = u[i - 1];
  const LtiFit fit = fit_adaptation_lti(u, j);
  EXPECT_TRUE(fit.at_constraint);
}

TEST(Whiteness, ThresholdAtFifty) {
  EXPECT_NEAR(whiteness_threshold(50, 0.95), 0.277, 1e-3);
  EXPECT_NEAR(whiteness_threshold(100, 0.95) * std::sqrt(2.0), whiteness_threshold(50, 0.95), 1e-12);
}

TEST(Whiteness, ReportFields) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(2.0, 3.0);
  std::vector<double> r;
  for (int i = 0; i < 400; ++i) r.push_back(n(rng));
  const auto rep = whiteness_test(r, 0.95, 10);
  EXPECT_EQ(rep.lags_tested, 10);
  EXPECT_NEAR(rep.residual_mean, 2.0, 0.5);
  EXPECT_NEAR(rep.residual_std, 3.0, 0.4);
  EXPECT_EQ(rep.passed, rep.max_normalized_autocorr < rep.threshold);
  EXPECT_EQ(whiteness_test(std::vector<double>(20, 1.0), 0.95, 10).lags_tested, 5);
}

TEST(Whiteness, TooShortThrows) { EXPECT_THROW(whiteness_test(std::vector<double>(19, 0.0)), std::invalid_argument); }

TEST(Whiteness, DefaultLagsCalibratedOnWhiteNoise) {
  int pass = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    std::vector<double> r;
    for (int i = 0; i < 50; ++i) r.push_back(n(rng));
    pass += whiteness_test(r).passed ? 1 : 0;
  }
  EXPECT_GE(pass, 90);
}

TEST(Whiteness, RejectsAutoregressiveResiduals) {
  int fail = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    std::vector<double> r;
    double x = n(rng);
    for (int i = 0; i < 50; ++i) {
      r.push_back(x);
      x = 0.8 * x + n(rng);
    }
    fail += whiteness_test(r).passed ? 0 : 1;
  }
  EXPECT_GE(fail, 95);
}

}  // namespace
}  // namespace synergy
