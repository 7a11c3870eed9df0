#pragma once

// Grey-box human motor model: a static preference map feeding an
// iteration-domain LTI adaptation system, observed through additive noise.

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace synergy {

/// Lower/upper limits of the synergy parameter.
struct SynergyBounds {
  double lo = 0.8;
  double hi = 2.4;

  double clamp(double theta) const;
  bool contains(double theta) const { return theta >= lo && theta <= hi; }
};

enum class Basis {
  kQuadratic,   // [θ², θ, 1]
  kPolynomial,  // monomials in descending order, any length
};

std::string to_string(Basis b);
Basis basis_from_string(const std::string& s);

/// Steady-state performance as a linear combination of basis functions.
struct PreferenceMap {
  std::vector<double> lambda;
  Basis basis = Basis::kQuadratic;

  PreferenceMap() = default;
  explicit PreferenceMap(std::vector<double> coeffs, Basis b = Basis::kQuadratic);

  bool is_concave() const;
};

struct Derivatives {
  double gradient = 0.0;
  double curvature = 0.0;
};

double eval_preference(const PreferenceMap& map, double theta);

/// Analytic u' and u''. Only the quadratic basis is supported.
Derivatives preference_derivatives(const PreferenceMap& map, double theta);

/// Vertex of a concave quadratic map. Throws std::domain_error otherwise.
double optimal_synergy(const PreferenceMap& map);

/// x_{i+1} = Φ x_i + Γ u_i,  y_i = Ψ x_i.
class AdaptationDynamics {
 public:
  AdaptationDynamics() = default;
  AdaptationDynamics(Eigen::MatrixXd phi, Eigen::VectorXd gamma, Eigen::RowVectorXd psi);

  const Eigen::MatrixXd& phi() const { return phi_; }
  const Eigen::VectorXd& gamma() const { return gamma_; }
  const Eigen::RowVectorXd& psi() const { return psi_; }
  Eigen::Index order() const { return phi_.rows(); }

  double spectral_radius() const;
  bool is_stable() const { return spectral_radius() < 1.0; }

 private:
  Eigen::MatrixXd phi_;
  Eigen::VectorXd gamma_;
  Eigen::RowVectorXd psi_;
};

struct LtiStep {
  Eigen::VectorXd state;
  double output = 0.0;
};

LtiStep lti_step(const AdaptationDynamics& dyn, const Eigen::VectorXd& state, double u);

/// Ψ(I−Φ)⁻¹Γ. Throws std::domain_error when I−Φ is singular.
double steady_state_gain(const AdaptationDynamics& dyn);

/// Rescales Γ so the steady-state gain is exactly one.
AdaptationDynamics normalize_gain(const AdaptationDynamics& dyn);

struct MotorNoise {
  double mean = 0.0;
  double std_dev = 0.0;
  std::uint64_t seed = 0;
};

/// Gaussian sample stream; one call to next() per iteration.
class NoiseSource {
 public:
  explicit NoiseSource(const MotorNoise& params);

  double next();
  const MotorNoise& params() const { return params_; }

 private:
  MotorNoise params_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> unit_{0.0, 1.0};
};

/// Everything needed to instantiate a simulated subject.
struct SubjectSpec {
  std::string id;
  PreferenceMap map;
  AdaptationDynamics dynamics;
  MotorNoise noise;
  Eigen::VectorXd initial_state;  // empty means cold start (zeros)

  void validate() const;
};

class SimulatedSubject {
 public:
  explicit SimulatedSubject(SubjectSpec spec);

  /// Applies θ for one task iteration and returns the measured performance.
  double step(double theta);

  /// Noise-free output Ψx of the current state.
  double clean_output() const;

  const SubjectSpec& spec() const { return spec_; }
  const Eigen::VectorXd& state() const { return state_; }

 private:
  SubjectSpec spec_;
  Eigen::VectorXd state_;
  NoiseSource noise_;
};

/// Identified parameters of the two reference subjects.
SubjectSpec reference_subject_a();
SubjectSpec reference_subject_b();

/// "A"/"B" (case-insensitive); throws std::invalid_argument for anything else.
SubjectSpec reference_subject(const std::string& id);

}  // namespace synergy
