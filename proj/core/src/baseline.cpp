#include "synergy/baseline.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace synergy {

void BaselineConfig::validate() const {
  if (!(omega_o > 0.0) || !(omega_o < std::numbers::pi)) throw std::invalid_argument("baseline.omega_o must be in (0, pi)");
  if (!(a >= 0.0)) throw std::invalid_argument("baseline.a must be >= 0");
  if (!(k > 0.0)) throw std::invalid_argument("baseline.k must be > 0");
  if (!(highpass_ratio > 0.0) || !(highpass_ratio < 1.0)) {
    throw std::invalid_argument("baseline.highpass_ratio must be in (0, 1)");
  }
  if (!(bounds.lo < bounds.hi)) throw std::invalid_argument("baseline bounds must satisfy theta_min < theta_max");
}

HighPass::HighPass(double cutoff) : alpha_(1.0 / (1.0 + cutoff)) {
  if (!(cutoff > 0.0)) throw std::invalid_argument("high-pass cutoff must be > 0");
}

double HighPass::step(double x) {
  if (!primed_) {
    prev_in_ = x;
    primed_ = true;
  }
  prev_out_ = alpha_ * (prev_out_ + x - prev_in_);
  prev_in_ = x;
  return prev_out_;
}

BlackBoxEs::BlackBoxEs(const BaselineConfig& cfg)
    : cfg_((cfg.validate(), cfg)), hp_(cfg.omega_o * cfg.highpass_ratio), theta_hat_(cfg.bounds.clamp(cfg.theta_0)) {
  theta_applied_ = cfg_.bounds.clamp(theta_hat_);  // sin(0) = 0
}

double BlackBoxEs::step(double J) {
  if (!std::isfinite(J)) {
    throw std::invalid_argument("non-finite performance at iteration " + std::to_string(i_));
  }
  TraceRow row;
  row.iteration = i_;
  row.theta_applied = theta_applied_;
  row.theta_hat = theta_hat_;
  row.J = J;

  // The high-pass always runs so its state tracks J; without dither there is
  // no excitation to correlate against and the update is suppressed.
  const double hp = hp_.step(J);
  const double xi = cfg_.a == 0.0 ? 0.0 : std::sin(cfg_.omega_o * static_cast<double>(i_)) * hp;
  theta_hat_ = cfg_.bounds.clamp(theta_hat_ + cfg_.k * xi);

  ++i_;
  theta_applied_ = cfg_.bounds.clamp(theta_hat_ + cfg_.a * std::sin(cfg_.omega_o * static_cast<double>(i_)));
  last_ = row;
  return theta_applied_;
}

}  // namespace synergy
