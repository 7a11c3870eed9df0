#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "synergy/model.hpp"

namespace synergy {
namespace {

const PreferenceMap kMapA({-158.15, 529.18, -293.34});
const PreferenceMap kMapB({-96.18, 342.13, -147.86});

// Vertex value λ₃ − λ₂²/(4λ₁), computed independently of eval_preference.
double vertex_value(const PreferenceMap& m) { return m.lambda[2] - m.lambda[1] * m.lambda[1] / (4.0 * m.lambda[0]); }

double grid_argmax(const PreferenceMap& m, double lo, double hi, double step) {
  double best = lo;
  double best_u = -INFINITY;
  for (double t = lo; t <= hi; t += step) {
    const double u = m.lambda[0] * t * t + m.lambda[1] * t + m.lambda[2];
    if (u > best_u) best_u = u, best = t;
  }
  return best;
}

TEST(Preference, EvaluatesSubjectAAtOne) { EXPECT_NEAR(eval_preference(kMapA, 1.0), 77.69, 1e-9); }

TEST(Preference, ConstantMapIsConstant) {
  const PreferenceMap c({0.0, 0.0, 42.5});
  for (double t : {-3.0, 0.0, 1.7, 100.0}) EXPECT_DOUBLE_EQ(eval_preference(c, t), 42.5);
}

TEST(Preference, SubjectBVertexValue) {
  const double ts = 1.7786;
  EXPECT_NEAR(eval_preference(kMapB, ts), 156.40, 0.05);
  EXPECT_NEAR(eval_preference(kMapB, optimal_synergy(kMapB)), vertex_value(kMapB), 1e-9);
}

TEST(Preference, DerivativesMatchFiniteDifferences) {
  const double h = 1e-6;
  const double fd = (eval_preference(kMapA, 1.0 + h) - eval_preference(kMapA, 1.0 - h)) / (2 * h);
  EXPECT_NEAR(preference_derivatives(kMapA, 1.0).gradient, 212.88, 1e-9);
  EXPECT_NEAR(preference_derivatives(kMapA, 1.0).gradient, fd, 1e-4);
  EXPECT_NEAR(preference_derivatives(kMapA, optimal_synergy(kMapA)).gradient, 0.0, 1e-9);

  const double h2 = 1e-3;
  for (double t : {0.9, 1.5, 2.2}) {
    const double fd2 =
        (eval_preference(kMapB, t + h2) - 2 * eval_preference(kMapB, t) + eval_preference(kMapB, t - h2)) / (h2 * h2);
    EXPECT_NEAR(preference_derivatives(kMapB, t).curvature, -192.36, 1e-9);
    EXPECT_NEAR(fd2, -192.36, 1e-3);
  }
}

TEST(Preference, DerivativesRejectNonQuadraticBasis) {
  const PreferenceMap cubic({1.0, 0.0, 0.0, 0.0}, Basis::kPolynomial);
  EXPECT_THROW(preference_derivatives(cubic, 1.0), std::invalid_argument);
  EXPECT_DOUBLE_EQ(eval_preference(cubic, 2.0), 8.0);
}

TEST(Preference, OptimalSynergyMatchesGridOracle) {
  EXPECT_NEAR(optimal_synergy(kMapA), 1.6731, 1e-4);
  EXPECT_NEAR(optimal_synergy(kMapB), 1.7786, 1e-4);
  EXPECT_NEAR(optimal_synergy(kMapA), grid_argmax(kMapA, 0.8, 2.4, 1e-4), 1e-4);
  EXPECT_NEAR(optimal_synergy(kMapB), grid_argmax(kMapB, 0.8, 2.4, 1e-4), 1e-4);
  EXPECT_DOUBLE_EQ(optimal_synergy(PreferenceMap({-1.0, 0.0, 0.0})), 0.0);
}

TEST(Preference, NonConcaveMapHasNoOptimum) {
  EXPECT_THROW(optimal_synergy(PreferenceMap({1.0, 0.0, 0.0})), std::domain_error);
  EXPECT_THROW(optimal_synergy(PreferenceMap({0.0, 1.0, 0.0})), std::domain_error);
}

TEST(Preference, QuadraticNeedsThreeCoefficients) {
  EXPECT_THROW(PreferenceMap({1.0, 2.0}), std::invalid_argument);
}

TEST(Lti, OneStepFromRestSubjectA) {
  const auto dyn = reference_subject_a().dynamics;
  const LtiStep s = lti_step(dyn, Eigen::Vector2d::Zero(), 1.0);
  EXPECT_DOUBLE_EQ(s.output, 0.0);
  EXPECT_DOUBLE_EQ(s.state(0), 0.839);
  EXPECT_DOUBLE_EQ(s.state(1), 0.037);
}

TEST(Lti, ZeroInputZeroStateStaysZero) {
  const auto dyn = reference_subject_b().dynamics;
  const LtiStep s = lti_step(dyn, Eigen::Vector2d::Zero(), 0.0);
  EXPECT_EQ(s.output, 0.0);
  EXPECT_TRUE(s.state.isZero());
}

TEST(Lti, DimensionMismatchThrows) {
  const auto dyn = reference_subject_a().dynamics;
  EXPECT_THROW(lti_step(dyn, Eigen::Vector3d::Zero(), 1.0), std::invalid_argument);
  EXPECT_THROW(AdaptationDynamics(Eigen::Matrix2d::Zero(), Eigen::Vector3d::Zero(), Eigen::RowVector2d::Zero()),
               std::invalid_argument);
}

TEST(Lti, ConstantInputSettlesToUnityGain) {
  const auto dyn = reference_subject_a().dynamics;
  Eigen::VectorXd x = Eigen::Vector2d::Zero();
  double y = 0.0;
  for (int i = 0; i < 200; ++i) {
    LtiStep s = lti_step(dyn, x, 100.0);
    y = s.output;
    x = s.state;
  }
  EXPECT_NEAR(y, 100.0, 1.0);
}

TEST(Gain, SubjectAByHand) {
  // det(I − Φ_A) = 1·0.65 − (−1)(−0.068) = 0.582; (I−Φ)⁻¹Γ first row:
  // (0.65·0.839 + 1·0.037)/0.582.
  const double det = 1.0 * (1.0 - 0.35) - (-1.0) * (-0.068);
  EXPECT_NEAR(det, 0.582, 1e-12);
  const double hand = (0.65 * 0.839 + 0.037) / det;
  const double g = steady_state_gain(reference_subject_a().dynamics);
  EXPECT_NEAR(g, hand, 1e-12);
  EXPECT_NEAR(g, 1.0006, 1e-3);
}

TEST(Gain, StaticUnityAndSubjectB) {
  Eigen::MatrixXd zero = Eigen::Matrix2d::Zero();
  const AdaptationDynamics unity(zero, Eigen::Vector2d(1, 0), Eigen::RowVector2d(1, 0));
  EXPECT_DOUBLE_EQ(steady_state_gain(unity), 1.0);
  EXPECT_NEAR(steady_state_gain(reference_subject_b().dynamics), 1.0, 2e-2);
}

TEST(Gain, SingularThrows) {
  const AdaptationDynamics integrator(Eigen::Matrix<double, 1, 1>(1.0), Eigen::Matrix<double, 1, 1>(1.0),
                                      Eigen::Matrix<double, 1, 1>(1.0));
  EXPECT_THROW(steady_state_gain(integrator), std::domain_error);
}

TEST(Gain, NormalizeGivesUnity) {
  const auto a = normalize_gain(reference_subject_a().dynamics);
  EXPECT_NEAR(steady_state_gain(a), 1.0, 1e-12);
  const auto twice = normalize_gain(a);
  EXPECT_NEAR((twice.gamma() - a.gamma()).norm(), 0.0, 1e-12);

  const AdaptationDynamics two(Eigen::Matrix<double, 1, 1>(0.5), Eigen::Matrix<double, 1, 1>(1.0),
                               Eigen::Matrix<double, 1, 1>(1.0));
  EXPECT_DOUBLE_EQ(steady_state_gain(two), 2.0);
  EXPECT_NEAR(steady_state_gain(normalize_gain(two)), 1.0, 1e-12);

  const AdaptationDynamics zero_gain(Eigen::Matrix<double, 1, 1>(0.5), Eigen::Matrix<double, 1, 1>(0.0),
                                     Eigen::Matrix<double, 1, 1>(1.0));
  EXPECT_THROW(normalize_gain(zero_gain), std::domain_error);
}

TEST(Gain, StepConvergenceBoundedBySpectralRadius) {
  const auto dyn = normalize_gain(reference_subject_b().dynamics);
  const double rho = dyn.spectral_radius();
  Eigen::VectorXd x = Eigen::Vector2d::Zero();
  std::vector<double> err;
  for (int i = 0; i < 60; ++i) {
    LtiStep s = lti_step(dyn, x, 10.0);
    err.push_back(std::abs(s.output - 10.0));
    x = s.state;
  }
  // Fit C from the early samples, then the envelope must hold throughout.
  double c = 0.0;
  for (int i = 0; i < 5; ++i) c = std::max(c, err[static_cast<std::size_t>(i)] / std::pow(rho + 1e-3, i));
  for (int i = 0; i < 60; ++i) EXPECT_LE(err[static_cast<std::size_t>(i)], 4 * c * std::pow(rho + 1e-3, i) + 1e-12);
}

TEST(Subject, ColdStartFirstOutputIsZero) {
  SubjectSpec s = reference_subject_a();
  s.noise.std_dev = 0.0;
  SimulatedSubject subj(s);
  EXPECT_DOUBLE_EQ(subj.step(1.3), 0.0);
}

TEST(Subject, SettlesToVertexValue) {
  SubjectSpec s = reference_subject_a();
  s.noise.std_dev = 0.0;
  SimulatedSubject subj(s);
  double j = 0.0;
  for (int i = 0; i < 200; ++i) j = subj.step(optimal_synergy(s.map));
  // Vertex oracle λ₃ − λ₂²/(4λ₁) = 149.33; the reference dynamics carry a
  // steady-state gain of 1.0006 on top of it.
  EXPECT_NEAR(vertex_value(s.map), 149.33, 0.01);
  EXPECT_NEAR(j, 1.0006 * 149.33, 0.5);
}

TEST(Subject, NoiseStdMatchesSubjectA) {
  SubjectSpec s = reference_subject_a();
  s.noise.seed = 7;
  SimulatedSubject noisy(s);
  s.noise.std_dev = 0.0;
  SimulatedSubject clean(s);
  std::vector<double> d;
  for (int i = 0; i < 1000; ++i) d.push_back(noisy.step(1.2) - clean.step(1.2));
  double m = 0.0;
  for (double v : d) m += v;
  m /= static_cast<double>(d.size());
  double ss = 0.0;
  for (double v : d) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(d.size() - 1));
  EXPECT_GE(sd, 15.0);
  EXPECT_LE(sd, 19.0);
}

TEST(Subject, InitialStateIsConfigurable) {
  SubjectSpec s = reference_subject_a();
  s.noise.std_dev = 0.0;
  s.initial_state = Eigen::Vector2d(50.0, 50.0);
  SimulatedSubject subj(s);
  EXPECT_DOUBLE_EQ(subj.step(1.0), 50.0);
  s.initial_state = Eigen::Vector3d::Zero();
  EXPECT_THROW(SimulatedSubject{s}, std::invalid_argument);
}

TEST(Subject, ReferenceLookup) {
  EXPECT_EQ(reference_subject("b").id, "B");
  EXPECT_THROW(reference_subject("C"), std::invalid_argument);
}

TEST(Bounds, Clamp) {
  const SynergyBounds b;
  EXPECT_DOUBLE_EQ(b.clamp(0.1), 0.8);
  EXPECT_DOUBLE_EQ(b.clamp(3.0), 2.4);
  EXPECT_DOUBLE_EQ(b.clamp(1.5), 1.5);
}

}  // namespace
}  // namespace synergy
