#include "synergy/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace synergy {

double SynergyBounds::clamp(double theta) const { return std::clamp(theta, lo, hi); }

std::string to_string(Basis b) {
  switch (b) {
    case Basis::kQuadratic:
      return "quadratic";
    case Basis::kPolynomial:
      return "polynomial";
  }
  return "unknown";
}

Basis basis_from_string(const std::string& s) {
  if (s == "quadratic") return Basis::kQuadratic;
  if (s == "polynomial") return Basis::kPolynomial;
  throw std::invalid_argument("unknown basis '" + s + "'");
}

PreferenceMap::PreferenceMap(std::vector<double> coeffs, Basis b) : lambda(std::move(coeffs)), basis(b) {
  if (basis == Basis::kQuadratic && lambda.size() != 3) {
    throw std::invalid_argument("quadratic preference map needs exactly 3 coefficients");
  }
  if (lambda.empty()) throw std::invalid_argument("preference map has no coefficients");
}

bool PreferenceMap::is_concave() const { return basis == Basis::kQuadratic && lambda.size() == 3 && lambda[0] < 0.0; }

double eval_preference(const PreferenceMap& map, double theta) {
  // Horner over descending monomials; the quadratic basis is the n=3 case.
  double acc = 0.0;
  for (double c : map.lambda) acc = acc * theta + c;
  return acc;
}

Derivatives preference_derivatives(const PreferenceMap& map, double theta) {
  if (map.basis != Basis::kQuadratic || map.lambda.size() != 3) {
    throw std::invalid_argument("analytic derivatives require the quadratic basis, got " + to_string(map.basis));
  }
  return {2.0 * map.lambda[0] * theta + map.lambda[1], 2.0 * map.lambda[0]};
}

double optimal_synergy(const PreferenceMap& map) {
  if (map.basis != Basis::kQuadratic || map.lambda.size() != 3) {
    throw std::invalid_argument("optimal synergy requires the quadratic basis");
  }
  if (!(map.lambda[0] < 0.0)) {
    throw std::domain_error("preference map is not strictly concave; no unique maximizer");
  }
  return -map.lambda[1] / (2.0 * map.lambda[0]);
}

AdaptationDynamics::AdaptationDynamics(Eigen::MatrixXd phi, Eigen::VectorXd gamma, Eigen::RowVectorXd psi)
    : phi_(std::move(phi)), gamma_(std::move(gamma)), psi_(std::move(psi)) {
  const auto n = phi_.rows();
  if (n == 0 || phi_.cols() != n) throw std::invalid_argument("phi must be a non-empty square matrix");
  if (gamma_.size() != n) throw std::invalid_argument("gamma length does not match phi");
  if (psi_.size() != n) throw std::invalid_argument("psi length does not match phi");
}

double AdaptationDynamics::spectral_radius() const {
  Eigen::EigenSolver<Eigen::MatrixXd> es(phi_, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

LtiStep lti_step(const AdaptationDynamics& dyn, const Eigen::VectorXd& state, double u) {
  if (state.size() != dyn.order()) {
    throw std::invalid_argument("state dimension " + std::to_string(state.size()) + " does not match order " +
                                std::to_string(dyn.order()));
  }
  LtiStep out;
  out.output = dyn.psi().dot(state);
  out.state = dyn.phi() * state + dyn.gamma() * u;
  return out;
}

double steady_state_gain(const AdaptationDynamics& dyn) {
  const auto n = dyn.order();
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) - dyn.phi();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible()) throw std::domain_error("I - phi is singular (marginally stable dynamics)");
  return dyn.psi().dot(lu.solve(dyn.gamma()));
}

AdaptationDynamics normalize_gain(const AdaptationDynamics& dyn) {
  const double g = steady_state_gain(dyn);
  if (g == 0.0 || !std::isfinite(g)) throw std::domain_error("cannot normalize a zero steady-state gain");
  return AdaptationDynamics(dyn.phi(), dyn.gamma() / g, dyn.psi());
}

NoiseSource::NoiseSource(const MotorNoise& params) : params_(params), engine_(params.seed) {
  if (!(params.std_dev >= 0.0)) throw std::invalid_argument("noise std_dev must be >= 0");
}

double NoiseSource::next() {
  // Draw even when std_dev == 0 so seeded streams stay aligned.
  const double z = unit_(engine_);
  return params_.mean + params_.std_dev * z;
}

void SubjectSpec::validate() const {
  if (map.lambda.empty()) throw std::invalid_argument("subject '" + id + "': preference map is empty");
  if (dynamics.order() == 0) throw std::invalid_argument("subject '" + id + "': dynamics not set");
  if (!dynamics.is_stable()) throw std::invalid_argument("subject '" + id + "': dynamics are not stable");
  if (initial_state.size() != 0 && initial_state.size() != dynamics.order()) {
    throw std::invalid_argument("subject '" + id + "': initial_state dimension does not match dynamics order");
  }
  if (!(noise.std_dev >= 0.0)) throw std::invalid_argument("subject '" + id + "': noise_std must be >= 0");
}

SimulatedSubject::SimulatedSubject(SubjectSpec spec) : spec_(std::move(spec)), noise_(spec_.noise) {
  spec_.validate();
  state_ = spec_.initial_state.size() ? spec_.initial_state : Eigen::VectorXd::Zero(spec_.dynamics.order());
}

double SimulatedSubject::step(double theta) {
  const double u = eval_preference(spec_.map, theta);
  LtiStep s = lti_step(spec_.dynamics, state_, u);
  state_ = std::move(s.state);
  return s.output + noise_.next();
}

double SimulatedSubject::clean_output() const { return spec_.dynamics.psi().dot(state_); }

SubjectSpec reference_subject_a() {
  SubjectSpec s;
  s.id = "A";
  s.map = PreferenceMap({-158.15, 529.18, -293.34});
  Eigen::MatrixXd phi(2, 2);
  phi << 0.0, 1.0, 0.068, 0.35;
  s.dynamics = AdaptationDynamics(phi, Eigen::Vector2d(0.839, 0.037), Eigen::RowVector2d(1.0, 0.0));
  s.noise = {0.0, 16.81, 0};
  return s;
}

SubjectSpec reference_subject_b() {
  SubjectSpec s;
  s.id = "B";
  s.map = PreferenceMap({-96.18, 342.13, -147.86});
  Eigen::MatrixXd phi(2, 2);
  phi << 0.0, 1.0, -0.017, 0.25;
  s.dynamics = AdaptationDynamics(phi, Eigen::Vector2d(-0.091, 0.834), Eigen::RowVector2d(1.0, 0.0));
  s.noise = {0.0, 22.36, 0};
  return s;
}

SubjectSpec reference_subject(const std::string& id) {
  std::string key = id;
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::toupper(c); });
  if (key == "A") return reference_subject_a();
  if (key == "B") return reference_subject_b();
  throw std::invalid_argument("unknown reference subject '" + id + "' (expected A or B)");
}

}  // namespace synergy
