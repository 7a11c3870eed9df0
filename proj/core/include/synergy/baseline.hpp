#pragma once

// Classic black-box perturbation extremum seeking, kept as the comparison
// baseline: high-pass J, demodulate with the dither, integrate.

#include <numbers>

#include "synergy/model.hpp"
#include "synergy/personalizer.hpp"

namespace synergy {

struct BaselineConfig {
  double omega_o = std::numbers::pi / 4.0;
  double a = 0.02;
  double k = 0.005;
  double theta_0 = 1.0;
  SynergyBounds bounds;
  /// High-pass cutoff as a fraction of omega_o.
  double highpass_ratio = 0.2;

  void validate() const;
};

/// First-order discrete high-pass y_i = α(y_{i−1} + x_i − x_{i−1}).
/// The previous input is seeded with the first sample so a constant
/// stream produces no start-up transient.
class HighPass {
 public:
  explicit HighPass(double cutoff);
  double step(double x);
  double alpha() const { return alpha_; }

 private:
  double alpha_;
  double prev_in_ = 0.0;
  double prev_out_ = 0.0;
  bool primed_ = false;
};

class BlackBoxEs {
 public:
  explicit BlackBoxEs(const BaselineConfig& cfg);

  double current_theta() const { return theta_applied_; }
  double theta_hat() const { return theta_hat_; }
  long iteration() const { return i_; }

  /// Consumes J for the current iteration and returns the next θ.
  double step(double J);

  const TraceRow& last_row() const { return last_; }
  const BaselineConfig& config() const { return cfg_; }

 private:
  BaselineConfig cfg_;
  HighPass hp_;
  double theta_hat_;
  double theta_applied_;
  long i_ = 0;
  TraceRow last_;
};

}  // namespace synergy
