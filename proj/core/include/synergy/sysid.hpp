#pragma once

// Identification of the grey-box model from iteration data.

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "synergy/model.hpp"

namespace synergy {

struct SteadyStateSample {
  double theta = 0.0;
  double mean_performance = 0.0;
  double std_performance = 0.0;
  int count = 1;
};

struct PreferenceFit {
  PreferenceMap map;
  bool concave = true;  // false flags a fit that violates strict concavity
  double rss = 0.0;
};

/// Ordinary least squares on [θ², θ, 1]. Throws std::invalid_argument with
/// fewer than three distinct θ values.
PreferenceFit fit_preference_map(const std::vector<SteadyStateSample>& samples);

struct LtiFit {
  AdaptationDynamics dynamics;
  double mse = 0.0;
  std::vector<double> poles;      // descending
  Eigen::VectorXd initial_state;  // estimated x0 in the returned realization
  bool at_constraint = false;     // optimum touched the pole-box boundary
};

struct LtiFitOptions {
  int order = 2;
  double grid_step = 0.02;  // initial pole grid spacing
  double pole_margin = 1e-4;  // poles restricted to [margin, 1 − margin]
  double tolerance = 1e-10;   // pole refinement stops at this step size
  bool estimate_initial_state = true;
};

/// Output-error fit with real poles in (0, 1) and unity steady-state gain.
/// Pole search on a refinable grid, inner linear least squares for the
/// numerator and (optionally) the initial state.
LtiFit fit_adaptation_lti(const std::vector<double>& u, const std::vector<double>& j, const LtiFitOptions& opts = {});

/// Simulated output of dyn from x0 under u (same length as u).
std::vector<double> simulate_lti(const AdaptationDynamics& dyn, const Eigen::VectorXd& x0, const std::vector<double>& u);

struct WhitenessReport {
  double max_normalized_autocorr = 0.0;
  double threshold = 0.0;
  bool passed = false;
  int lags_tested = 0;
  double residual_mean = 0.0;
  double residual_std = 0.0;
};

/// Two-sided normal quantile scaled by 1/√N as the acceptance band.
double whiteness_threshold(std::size_t n, double confidence);

/// Normalized autocorrelation r(k)/r(0) over lags 1..max_lag (capped at
/// ⌊N/4⌋). Residuals are not mean-centred. Throws for N < 20.
WhitenessReport whiteness_test(const std::vector<double>& residuals, double confidence = 0.95, int max_lag = 2);

}  // namespace synergy
