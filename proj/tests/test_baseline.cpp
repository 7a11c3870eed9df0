#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "synergy/baseline.hpp"
#include "synergy/model.hpp"

namespace synergy {
namespace {

TEST(HighPass, ConstantStreamGivesZero) {
  HighPass hp(0.2);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(hp.step(42.0), 0.0);
}

TEST(HighPass, StepDecaysGeometrically) {
  HighPass hp(0.2);
  hp.step(0.0);
  const double first = hp.step(1.0);
  EXPECT_DOUBLE_EQ(first, hp.alpha());
  EXPECT_DOUBLE_EQ(hp.step(1.0), hp.alpha() * first);
}

TEST(BlackBox, ConstantPerformanceDoesNotDrift) {
  BlackBoxEs es(BaselineConfig{});
  double at50 = 0.0;
  for (int i = 0; i <= 200; ++i) {
    if (i == 50) at50 = es.theta_hat();
    es.step(120.0);
  }
  EXPECT_LE(std::abs(es.theta_hat() - at50), 1e-3);
}

TEST(BlackBox, ConvergesOnStaticQuadratic) {
  const PreferenceMap map({-158.15, 529.18, -293.34});
  BlackBoxEs es(BaselineConfig{});
  for (int i = 0; i < 500; ++i) es.step(eval_preference(map, es.current_theta()));
  EXPECT_NEAR(es.theta_hat(), optimal_synergy(map), 0.1);
}

TEST(BlackBox, MostlyFailsOnSubjectBWithinEpisode) {
  int failures = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SubjectSpec spec = reference_subject_b();
    spec.noise.seed = seed;
    SimulatedSubject subj(spec);
    BlackBoxEs es(BaselineConfig{});
    for (int i = 0; i < 150; ++i) es.step(subj.step(es.current_theta()));
    if (std::abs(es.theta_hat() - optimal_synergy(spec.map)) >= 0.1) ++failures;
  }
  EXPECT_GT(failures, 10);
}

TEST(BlackBox, OutputStaysInBounds) {
  BaselineConfig cfg;
  cfg.k = 5.0;
  BlackBoxEs es(cfg);
  for (int i = 0; i < 300; ++i) {
    const double th = es.step(1000.0 * std::sin(0.9 * i) + (i % 2 ? 500.0 : -500.0));
    EXPECT_GE(th, cfg.bounds.lo);
    EXPECT_LE(th, cfg.bounds.hi);
  }
}

TEST(BlackBox, RejectsNonFinite) {
  BlackBoxEs es(BaselineConfig{});
  EXPECT_THROW(es.step(std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
}

TEST(BlackBox, TraceLeavesEstimatesEmpty) {
  BlackBoxEs es(BaselineConfig{});
  es.step(10.0);
  EXPECT_FALSE(es.last_row().grad_est.has_value());
  EXPECT_FALSE(es.last_row().curv_est.has_value());
  EXPECT_EQ(es.last_row().branch, Branch::kNone);
}

}  // namespace
}  // namespace synergy
