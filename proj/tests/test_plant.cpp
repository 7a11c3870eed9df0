#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "synergy/plant.hpp"

namespace synergy {
namespace {

TEST(Objective, SaturationFloors) { EXPECT_NEAR(objective(0.4, 0.4), 200.02, 1e-2); }
TEST(Objective, FailureCorner) { EXPECT_NEAR(objective(10.0, 3.0), 16.92, 1e-2); }
TEST(Objective, UnitPoint) { EXPECT_NEAR(objective(1.0, 1.0), 75.01, 1e-2); }

TEST(Objective, MonotoneAndBounded) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> e(0.0, 30.0);
  std::uniform_real_distribution<double> t(0.0, 3.0);
  for (int k = 0; k < 1000; ++k) {
    const double e1 = e(rng), e2 = e(rng), t1 = t(rng), t2 = t(rng);
    const double lo_e = std::min(e1, e2), hi_e = std::max(e1, e2);
    const double lo_t = std::min(t1, t2), hi_t = std::max(t1, t2);
    EXPECT_GE(objective(lo_e, t1), objective(hi_e, t1));
    EXPECT_GE(objective(e1, lo_t), objective(e1, hi_t));
    const double j = objective(e1, t1);
    EXPECT_GT(j, 0.0);
    EXPECT_LE(j, 200.02 + 1e-9);
  }
}

TEST(Kinematics, InverseRoundTrip) {
  const ArmGeometry g;
  for (const Eigen::Vector2d& p : {Eigen::Vector2d(30, -5), Eigen::Vector2d(53, -5), Eigen::Vector2d(10, -40)}) {
    const auto [q, beta] = g.inverse(p);
    EXPECT_NEAR((g.hand(q, beta) - p).norm(), 0.0, 1e-9);
    EXPECT_GE(beta, 0.0);
  }
  EXPECT_THROW(g.inverse(Eigen::Vector2d(100, 0)), std::domain_error);
}

TEST(Reach, DefaultTargetsAre23cmApart) {
  const ReachTask t;
  EXPECT_NEAR((t.end_target - t.start_target).norm(), 23.0, 1e-12);
  EXPECT_EQ(t.time_limit, 3.0);
  EXPECT_EQ(t.success_radius, 5.0);
}

TEST(Reach, NoShoulderMotionMeansNoReach) {
  ShoulderProfile prof;
  prof.peak_flexion = 0.0;
  const auto out = simulate_reach({}, {}, 1.5, prof);
  EXPECT_DOUBLE_EQ(out.completion_time, 3.0);
  EXPECT_NEAR(out.end_error, 23.0, 1e-9);
  EXPECT_FALSE(out.completed);
}

TEST(Reach, FrozenElbowTracesAnArc) {
  const ArmGeometry g;
  const ReachTask task;
  const auto out = simulate_reach(g, task, 0.0, {});
  const double r = (out.hand_path.front().p - g.shoulder_position).norm();
  for (const auto& s : out.hand_path) EXPECT_NEAR((s.p - g.shoulder_position).norm(), r, 1e-9);
  EXPECT_NEAR(out.end_error, (out.hand_path.back().p - task.end_target).norm(), 1e-12);
}

TEST(Reach, EndErrorHasInteriorMinimum) {
  double best = 1e9, best_theta = 0.0, prev = -1.0;
  for (int k = 0; k <= 160; ++k) {
    const double th = 0.8 + 0.01 * k;
    const double e = simulate_reach({}, {}, th, {}).end_error;
    if (prev >= 0.0) {
      EXPECT_LT(std::abs(e - prev), 1.0) << "discontinuity near theta=" << th;
    }
    prev = e;
    if (e < best) best = e, best_theta = th;
  }
  EXPECT_GT(best_theta, 0.85);
  EXPECT_LT(best_theta, 2.35);
}

TEST(Reach, ObjectiveUnimodalUpToPlateau) {
  std::vector<double> j;
  for (int k = 0; k <= 160; ++k) j.push_back(objective(simulate_reach({}, {}, 0.8 + 0.01 * k, {})));
  const auto peak = std::max_element(j.begin(), j.end()) - j.begin();
  for (long k = 1; k <= peak; ++k) EXPECT_GE(j[static_cast<std::size_t>(k)] + 1e-9, j[static_cast<std::size_t>(k - 1)]);
  for (std::size_t k = static_cast<std::size_t>(peak) + 1; k < j.size(); ++k) EXPECT_LE(j[k], j[k - 1] + 1e-9);
}

TEST(Reach, Deterministic) {
  const auto a = simulate_reach({}, {}, 1.37, {});
  const auto b = simulate_reach({}, {}, 1.37, {});
  EXPECT_EQ(a.end_error, b.end_error);
  EXPECT_EQ(a.completion_time, b.completion_time);
  ASSERT_EQ(a.hand_path.size(), b.hand_path.size());
  for (std::size_t i = 0; i < a.hand_path.size(); ++i) EXPECT_EQ(a.hand_path[i].p, b.hand_path[i].p);
}

TEST(Reach, CompletionMatchesDefinition) {
  for (double th : {0.8, 1.2, 1.5, 2.0, 2.4}) {
    const auto o = simulate_reach({}, {}, th, {});
    EXPECT_EQ(o.completed, o.end_error <= 5.0 && o.completion_time <= 3.0);
  }
}

TEST(Reach, InvalidInputs) {
  ArmGeometry g;
  g.upper_arm_length = 0.0;
  EXPECT_THROW(simulate_reach(g, {}, 1.0, {}), std::invalid_argument);
  ShoulderProfile p;
  p.duration = 0.0;
  EXPECT_THROW(simulate_reach({}, {}, 1.0, p), std::invalid_argument);
  EXPECT_THROW(simulate_reach({}, {}, NAN, {}), std::invalid_argument);
}

TEST(Reach, HandPathCsv) {
  const auto o = simulate_reach({}, {}, 1.5, {});
  std::ostringstream os;
  write_hand_path_csv(os, o.hand_path);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,x,y");
  std::size_t n = 0;
  while (std::getline(is, line)) ++n;
  EXPECT_EQ(n, o.hand_path.size());
}

}  // namespace
}  // namespace synergy
