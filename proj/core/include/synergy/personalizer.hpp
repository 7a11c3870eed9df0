#pragma once

// Grey-box extremum seeking: band-pass filter -> gradient/curvature observer
// -> switched Newton/gradient optimizer, excited by a sinusoidal dither.

#include <array>
#include <complex>
#include <numbers>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "synergy/model.hpp"

namespace synergy {

/// Second-order band-pass in state space: w' = Φw + ΓJ, y = Ψw + D·J.
class BandPassFilter {
 public:
  BandPassFilter(Eigen::Matrix2d phi, Eigen::Vector2d gamma, Eigen::RowVector2d psi, double feedthrough);

  /// Output for J using the current state, then advances the state.
  double step(double j);
  void reset() { w_.setZero(); }

  /// Discrete frequency response at ω rad/iteration.
  std::complex<double> response(double omega) const;

  const Eigen::Matrix2d& phi() const { return phi_; }
  const Eigen::Vector2d& gamma() const { return gamma_; }
  const Eigen::RowVector2d& psi() const { return psi_; }
  double feedthrough() const { return d_; }
  const Eigen::Vector2d& state() const { return w_; }

 private:
  Eigen::Matrix2d phi_;
  Eigen::Vector2d gamma_;
  Eigen::RowVector2d psi_;
  double d_;
  Eigen::Vector2d w_ = Eigen::Vector2d::Zero();
};

/// Passband [ω, nω], centre √(ω·nω), peak gain H, quality Q. Prewarped
/// bilinear transform so the discrete peak sits exactly at the centre.
BandPassFilter design_bandpass(double omega_o, int n, double H, double Q);

enum class ObserverForm {
  kMatched,  // exact rotation exp(ωΦ_o), gain placing poles at exp(ω·eig(Φ_o − LΨ_o))
  kDirect,  // ẑ' = ωΦ_o ẑ + ωL(y − Ψ_o ẑ); rejected at construction when unstable
};

std::string to_string(ObserverForm f);
ObserverForm observer_form_from_string(const std::string& s);

/// Luenberger observer over the dither harmonics. States: offset,
/// (sin, cos) pair at ω, (sin, cos) pair at 2ω.
class GradCurvObserver {
 public:
  GradCurvObserver(double omega_o, const Eigen::Matrix<double, 5, 1>& L, ObserverForm form = ObserverForm::kMatched);

  void step(double u_filtered);
  void reset() {
    z_.setZero();
    primed_ = false;
  }

  /// Closed-loop iteration matrix A − KΨ_o.
  Eigen::Matrix<double, 5, 5> closed_loop() const;
  double closed_loop_spectral_radius() const;

  const Eigen::Matrix<double, 5, 1>& z_hat() const { return z_; }
  void set_z_hat(const Eigen::Matrix<double, 5, 1>& z) {
    z_ = z;
    primed_ = true;
  }
  const Eigen::Matrix<double, 5, 5>& transition() const { return a_; }
  const Eigen::Matrix<double, 5, 1>& injection_gain() const { return k_; }

  static Eigen::Matrix<double, 5, 5> phi_o();
  static Eigen::Matrix<double, 1, 5> psi_o();

 private:
  Eigen::Matrix<double, 5, 5> a_;
  Eigen::Matrix<double, 5, 1> k_;
  Eigen::Matrix<double, 5, 1> z_ = Eigen::Matrix<double, 5, 1>::Zero();
  bool primed_ = false;
};

/// Demodulates ẑ at index i: û' = [0,S1,C1,0,0]ẑ/a, û'' = [0,0,0,S2,C2]ẑ/a².
Derivatives estimate_derivatives(const Eigen::Matrix<double, 5, 1>& z_hat, long i, double omega_o, double a);

enum class Branch { kNone, kGradient, kNewton };

std::string to_string(Branch b);
Branch branch_from_string(const std::string& s);

struct OptimizerState {
  double theta_hat = 1.0;
  double k = 0.05;
  double epsilon = 0.1;
  SynergyBounds bounds;
  Branch last_branch = Branch::kNone;
};

/// Newton step −û'/û'' when |û'| < −ε·û'', otherwise gradient step û';
/// θ̂ += kωΔ, then clamped.
void optimizer_step(OptimizerState& opt, double omega_o, const Derivatives& est);

enum class DitherMode {
  kFundamental,  // a·sin(ωi) only
  kSum,          // a·sin(ωi) + a·sin(2ωi)
};

std::string to_string(DitherMode m);
DitherMode dither_mode_from_string(const std::string& s);

struct DitherGenerator {
  double a = 0.02;
  double omega_o = std::numbers::pi / 4.0;
  DitherMode mode = DitherMode::kFundamental;

  /// [a·sin(ωi), a·sin(2ωi)]
  std::array<double, 2> vector(long i) const;
  /// Perturbation actually added to θ̂.
  double operator()(long i) const;
};

struct PersonalizerConfig {
  double omega_o = std::numbers::pi / 4.0;
  int n_harmonic = 2;
  double a = 0.02;
  double k = 0.05;
  double epsilon = 0.1;
  double H = 0.5;
  double Q = 5.0;
  Eigen::Matrix<double, 5, 1> L = (Eigen::Matrix<double, 5, 1>() << 1.5, 0.25, 0.25, 2.0, -2.0).finished();
  double theta_0 = 1.0;
  SynergyBounds bounds;
  int warmup_iterations = 8;
  DitherMode dither_mode = DitherMode::kFundamental;
  ObserverForm observer_form = ObserverForm::kMatched;

  void validate() const;
};

/// One row of an episode trace. theta_hat is the dither centre for this
/// iteration; the estimates and branch describe the update made after J.
struct TraceRow {
  long iteration = 0;
  double theta_applied = 0.0;
  double theta_hat = 0.0;
  double J = 0.0;
  std::optional<double> u_theta_f;
  std::optional<double> grad_est;
  std::optional<double> curv_est;
  Branch branch = Branch::kNone;

  bool operator==(const TraceRow&) const = default;
};

class Personalizer {
 public:
  explicit Personalizer(const PersonalizerConfig& cfg);

  /// θ to apply at the current iteration.
  double current_theta() const { return theta_applied_; }
  double theta_hat() const { return opt_.theta_hat; }
  long iteration() const { return i_; }

  /// Consumes the performance measured at the current iteration and returns
  /// the θ for the next one. Throws std::invalid_argument on non-finite J.
  double step(double J);

  const TraceRow& last_row() const { return last_; }
  const PersonalizerConfig& config() const { return cfg_; }
  const GradCurvObserver& observer() const { return observer_; }

 private:
  PersonalizerConfig cfg_;
  BandPassFilter filter_;
  GradCurvObserver observer_;
  DitherGenerator dither_;
  OptimizerState opt_;
  long i_ = 0;
  double theta_applied_;
  TraceRow last_;
};

}  // namespace synergy
