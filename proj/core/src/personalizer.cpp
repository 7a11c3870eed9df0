#include "synergy/personalizer.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

namespace synergy {

namespace {

using Mat5 = Eigen::Matrix<double, 5, 5>;
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Row5 = Eigen::Matrix<double, 1, 5>;

// Ackermann's formula for a single-output observer: returns K such that
// eig(A − K·C) equals the given (conjugate-closed) pole set.
Vec5 place_observer_poles(const Mat5& A, const Row5& C, const Eigen::Matrix<std::complex<double>, 5, 1>& poles) {
  std::vector<std::complex<double>> coeffs{1.0};  // monic, descending powers
  for (const auto& p : poles) {
    std::vector<std::complex<double>> next(coeffs.size() + 1, 0.0);
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      next[j] += coeffs[j];
      next[j + 1] -= p * coeffs[j];
    }
    coeffs = std::move(next);
  }

  Mat5 pa = Mat5::Zero();
  for (const auto& c : coeffs) pa = pa * A + c.real() * Mat5::Identity();

  Mat5 obs;
  Row5 row = C;
  for (int r = 0; r < 5; ++r) {
    obs.row(r) = row;
    row = row * A;
  }
  Eigen::FullPivLU<Mat5> lu(obs);
  if (!lu.isInvertible()) throw std::domain_error("observer pair (A, Psi_o) is not observable");
  Vec5 e_last = Vec5::Zero();
  e_last(4) = 1.0;
  return pa * lu.solve(e_last);
}

double spectral_radius(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

BandPassFilter::BandPassFilter(Eigen::Matrix2d phi, Eigen::Vector2d gamma, Eigen::RowVector2d psi, double feedthrough)
    : phi_(phi), gamma_(gamma), psi_(psi), d_(feedthrough) {
  if (spectral_radius(phi_) >= 1.0) throw std::domain_error("band-pass filter is not stable");
}

double BandPassFilter::step(double j) {
  const double y = psi_.dot(w_) + d_ * j;
  w_ = phi_ * w_ + gamma_ * j;
  return y;
}

std::complex<double> BandPassFilter::response(double omega) const {
  const std::complex<double> z = std::polar(1.0, omega);
  const Eigen::Matrix2cd m = z * Eigen::Matrix2cd::Identity() - phi_.cast<std::complex<double>>();
  const Eigen::Vector2cd x = m.inverse() * gamma_.cast<std::complex<double>>();
  return (psi_.cast<std::complex<double>>() * x)(0) + d_;
}

BandPassFilter design_bandpass(double omega_o, int n, double H, double Q) {
  if (!(omega_o > 0.0)) throw std::invalid_argument("omega_o must be > 0");
  if (n < 1) throw std::invalid_argument("harmonic count n must be >= 1");
  if (!(n * omega_o < std::numbers::pi)) {
    throw std::invalid_argument("n*omega_o must stay below pi (iteration-domain Nyquist)");
  }
  if (!(H > 0.0) || !(Q > 0.0)) throw std::invalid_argument("H and Q must be > 0");

  // Analog prototype H(W/Q)s / (s² + (W/Q)s + W²) with W prewarped so that
  // s = K(z−1)/(z+1), K = 2, maps W onto the discrete centre frequency.
  const double wc = std::sqrt(omega_o * n * omega_o);
  const double K = 2.0;
  const double W = K * std::tan(wc / 2.0);
  const double bw = W / Q;
  const double a0 = K * K + bw * K + W * W;
  const double b0 = H * bw * K / a0;
  const double b2 = -b0;
  const double a1 = (2.0 * W * W - 2.0 * K * K) / a0;
  const double a2 = (K * K - bw * K + W * W) / a0;

  // Controllable canonical realization of (b0 + b2 z⁻²)/(1 + a1 z⁻¹ + a2 z⁻²);
  // the biquad is biproper so a feedthrough term carries b0.
  Eigen::Matrix2d phi;
  phi << -a1, -a2, 1.0, 0.0;
  const Eigen::Vector2d gamma(1.0, 0.0);
  const Eigen::RowVector2d psi(-a1 * b0, b2 - a2 * b0);
  return BandPassFilter(phi, gamma, psi, b0);
}

std::string to_string(ObserverForm f) { return f == ObserverForm::kMatched ? "matched" : "direct"; }

ObserverForm observer_form_from_string(const std::string& s) {
  if (s == "matched") return ObserverForm::kMatched;
  if (s == "direct") return ObserverForm::kDirect;
  throw std::invalid_argument("unknown observer form '" + s + "' (expected matched|direct)");
}

Mat5 GradCurvObserver::phi_o() {
  Mat5 p = Mat5::Zero();
  p(1, 2) = 1.0;
  p(2, 1) = -1.0;
  p(3, 4) = 2.0;
  p(4, 3) = -2.0;
  return p;
}

Row5 GradCurvObserver::psi_o() { return (Row5() << 1.0, 1.0, 0.0, 0.0, -0.25).finished(); }

GradCurvObserver::GradCurvObserver(double omega_o, const Vec5& L, ObserverForm form) {
  if (!(omega_o > 0.0)) throw std::invalid_argument("omega_o must be > 0");
  const Mat5 p = phi_o();
  const Row5 c = psi_o();
  if (form == ObserverForm::kDirect) {
    a_ = omega_o * p;
    k_ = omega_o * L;
  } else {
    // Keep the continuous design's error dynamics but integrate the
    // harmonic model exactly over one iteration.
    a_ = (omega_o * p).exp();
    const Mat5 cont = p - L * c;
    Eigen::EigenSolver<Mat5> es(cont, false);
    const Eigen::Matrix<std::complex<double>, 5, 1> poles = (omega_o * es.eigenvalues()).array().exp();
    k_ = place_observer_poles(a_, c, poles);
  }
  const double rho = closed_loop_spectral_radius();
  if (!(rho < 1.0)) {
    throw std::domain_error("observer closed-loop spectral radius " + std::to_string(rho) + " >= 1 for the " +
                            to_string(form) + " form");
  }
}

Mat5 GradCurvObserver::closed_loop() const { return a_ - k_ * psi_o(); }

double GradCurvObserver::closed_loop_spectral_radius() const { return spectral_radius(closed_loop()); }

void GradCurvObserver::step(double u_filtered) {
  // Start the DC state at the first sample so a large offset does not ring
  // through the slow harmonic modes.
  if (!primed_) {
    z_(0) = u_filtered;
    primed_ = true;
  }
  const double innovation = u_filtered - psi_o().dot(z_);
  z_ = a_ * z_ + k_ * innovation;
}

Derivatives estimate_derivatives(const Vec5& z, long i, double omega_o, double a) {
  // Without excitation there is nothing to demodulate against.
  if (a == 0.0) return {};
  const double t = omega_o * static_cast<double>(i);
  const double grad = (std::sin(t) * z(1) + std::cos(t) * z(2)) / a;
  const double curv = (std::sin(2.0 * t) * z(3) + std::cos(2.0 * t) * z(4)) / (a * a);
  return {grad, curv};
}

std::string to_string(Branch b) {
  switch (b) {
    case Branch::kGradient:
      return "gradient";
    case Branch::kNewton:
      return "newton";
    case Branch::kNone:
      break;
  }
  return "none";
}

Branch branch_from_string(const std::string& s) {
  if (s == "gradient") return Branch::kGradient;
  if (s == "newton") return Branch::kNewton;
  if (s == "none" || s.empty()) return Branch::kNone;
  throw std::invalid_argument("unknown branch '" + s + "'");
}

void optimizer_step(OptimizerState& opt, double omega_o, const Derivatives& est) {
  double delta;
  if (std::abs(est.gradient) < -opt.epsilon * est.curvature) {
    delta = -est.gradient / est.curvature;
    opt.last_branch = Branch::kNewton;
  } else {
    delta = est.gradient;
    opt.last_branch = Branch::kGradient;
  }
  opt.theta_hat = opt.bounds.clamp(opt.theta_hat + opt.k * omega_o * delta);
}

std::string to_string(DitherMode m) { return m == DitherMode::kSum ? "sum" : "fundamental"; }

DitherMode dither_mode_from_string(const std::string& s) {
  if (s == "fundamental") return DitherMode::kFundamental;
  if (s == "sum") return DitherMode::kSum;
  throw std::invalid_argument("unknown dither mode '" + s + "' (expected fundamental|sum)");
}

std::array<double, 2> DitherGenerator::vector(long i) const {
  const double t = omega_o * static_cast<double>(i);
  return {a * std::sin(t), a * std::sin(2.0 * t)};
}

double DitherGenerator::operator()(long i) const {
  const auto d = vector(i);
  return mode == DitherMode::kSum ? d[0] + d[1] : d[0];
}

void PersonalizerConfig::validate() const {
  if (!(omega_o > 0.0)) throw std::invalid_argument("personalizer.omega_o must be > 0");
  if (!(a >= 0.0)) throw std::invalid_argument("personalizer.a must be >= 0");
  if (!(k > 0.0)) throw std::invalid_argument("personalizer.k must be > 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("personalizer.epsilon must be > 0");
  if (!(bounds.lo < bounds.hi)) throw std::invalid_argument("personalizer bounds must satisfy theta_min < theta_max");
  if (!std::isfinite(theta_0)) throw std::invalid_argument("personalizer.theta_0 must be finite");
  if (warmup_iterations < 0) throw std::invalid_argument("personalizer.warmup_iterations must be >= 0");
  if (!L.allFinite()) throw std::invalid_argument("personalizer.L must be finite");
}

Personalizer::Personalizer(const PersonalizerConfig& cfg)
    : cfg_((cfg.validate(), cfg)),
      filter_(design_bandpass(cfg.omega_o, cfg.n_harmonic, cfg.H, cfg.Q)),
      observer_(cfg.omega_o, cfg.L, cfg.observer_form),
      dither_{cfg.a, cfg.omega_o, cfg.dither_mode} {
  opt_.theta_hat = cfg.bounds.clamp(cfg.theta_0);
  opt_.k = cfg.k;
  opt_.epsilon = cfg.epsilon;
  opt_.bounds = cfg.bounds;
  theta_applied_ = cfg.bounds.clamp(opt_.theta_hat + dither_(0));
}

double Personalizer::step(double J) {
  if (!std::isfinite(J)) {
    throw std::invalid_argument("non-finite performance at iteration " + std::to_string(i_));
  }
  TraceRow row;
  row.iteration = i_;
  row.theta_applied = theta_applied_;
  row.theta_hat = opt_.theta_hat;
  row.J = J;

  const double uf = filter_.step(J);
  observer_.step(uf);
  // ẑ now predicts iteration i+1, so demodulate against that phase.
  const Derivatives est = estimate_derivatives(observer_.z_hat(), i_ + 1, cfg_.omega_o, cfg_.a);
  row.u_theta_f = uf;
  row.grad_est = est.gradient;
  row.curv_est = est.curvature;

  if (i_ >= cfg_.warmup_iterations) {
    optimizer_step(opt_, cfg_.omega_o, est);
    row.branch = opt_.last_branch;
  }

  ++i_;
  theta_applied_ = cfg_.bounds.clamp(opt_.theta_hat + dither_(i_));
  last_ = row;
  return theta_applied_;
}

}  // namespace synergy
