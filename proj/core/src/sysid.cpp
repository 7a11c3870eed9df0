#include "synergy/sysid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/normal.hpp>

namespace synergy {

PreferenceFit fit_preference_map(const std::vector<SteadyStateSample>& samples) {
  std::set<double> distinct;
  for (const auto& s : samples) {
    if (s.count < 1) throw std::invalid_argument("steady-state sample count must be >= 1");
    if (!(s.std_performance >= 0.0)) throw std::invalid_argument("steady-state sample std must be >= 0");
    if (!std::isfinite(s.theta) || !std::isfinite(s.mean_performance)) {
      throw std::invalid_argument("steady-state samples must be finite");
    }
    distinct.insert(s.theta);
  }
  if (distinct.size() < 3) {
    throw std::invalid_argument("quadratic fit needs at least 3 distinct theta values, got " +
                                std::to_string(distinct.size()));
  }

  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double t = samples[static_cast<std::size_t>(r)].theta;
    X.row(r) << t * t, t, 1.0;
    y(r) = samples[static_cast<std::size_t>(r)].mean_performance;
  }
  const Eigen::Vector3d lambda = X.colPivHouseholderQr().solve(y);

  PreferenceFit fit;
  fit.map = PreferenceMap({lambda(0), lambda(1), lambda(2)});
  fit.concave = lambda(0) < 0.0;
  fit.rss = (X * lambda - y).squaredNorm();
  return fit;
}

namespace {

// Coefficients a_1..a_n of ∏(1 − p_k z⁻¹) = 1 + a_1 z⁻¹ + … + a_n z⁻ⁿ.
std::vector<double> denominator(const std::vector<double>& poles) {
  std::vector<double> c{1.0};
  for (double p : poles) {
    std::vector<double> next(c.size() + 1, 0.0);
    for (std::size_t j = 0; j < c.size(); ++j) {
      next[j] += c[j];
      next[j + 1] -= p * c[j];
    }
    c = std::move(next);
  }
  return {c.begin() + 1, c.end()};
}

Eigen::MatrixXd companion(const std::vector<double>& a) {
  const auto n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index r = 0; r + 1 < n; ++r) phi(r, r + 1) = 1.0;
  for (Eigen::Index c = 0; c < n; ++c) phi(n - 1, c) = -a[static_cast<std::size_t>(n - 1 - c)];
  return phi;
}

struct Candidate {
  std::vector<double> poles;
  double sse = std::numeric_limits<double>::infinity();
  Eigen::VectorXd b;   // numerator b_1..b_n
  Eigen::VectorXd x0;  // initial state in the companion realization
};

class OutputErrorProblem {
 public:
  OutputErrorProblem(const std::vector<double>& u, const std::vector<double>& j, bool estimate_x0)
      : u_(u), j_(Eigen::Map<const Eigen::VectorXd>(j.data(), static_cast<Eigen::Index>(j.size()))),
        estimate_x0_(estimate_x0) {}

  Candidate evaluate(std::vector<double> poles) const {
    std::sort(poles.begin(), poles.end(), std::greater<>());
    const auto n = static_cast<Eigen::Index>(poles.size());
    const auto N = j_.size();
    const std::vector<double> a = denominator(poles);
    const double dc = std::accumulate(a.begin(), a.end(), 1.0);  // A(1)

    // v = u / A(z) from rest; regressor k is v delayed by k.
    Eigen::VectorXd v(N);
    for (Eigen::Index i = 0; i < N; ++i) {
      double acc = u_[static_cast<std::size_t>(i)];
      for (Eigen::Index m = 1; m <= n && m <= i; ++m) acc -= a[static_cast<std::size_t>(m - 1)] * v(i - m);
      v(i) = acc;
    }
    auto delayed = [&](Eigen::Index k, Eigen::Index i) { return i >= k ? v(i - k) : 0.0; };

    const Eigen::Index nb = n - 1;  // b_n eliminated by the unity-gain constraint
    const Eigen::Index nx = estimate_x0_ ? n : 0;
    Eigen::MatrixXd X(N, nb + nx);
    Eigen::VectorXd target(N);
    const Eigen::MatrixXd phi = companion(a);
    Eigen::RowVectorXd free_row = Eigen::RowVectorXd::Unit(n, 0);
    for (Eigen::Index i = 0; i < N; ++i) {
      const double rn = delayed(n, i);
      target(i) = j_(i) - dc * rn;
      for (Eigen::Index k = 0; k < nb; ++k) X(i, k) = delayed(k + 1, i) - rn;
      if (nx) {
        X.block(i, nb, 1, nx) = free_row;
        free_row = free_row * phi;
      }
    }

    Candidate c;
    c.poles = std::move(poles);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(X.cols());
    if (X.cols() > 0) theta = X.colPivHouseholderQr().solve(target);
    c.sse = (target - X * theta).squaredNorm();
    c.b.resize(n);
    c.b.head(nb) = theta.head(nb);
    c.b(n - 1) = dc - theta.head(nb).sum();
    c.x0 = nx ? Eigen::VectorXd(theta.tail(nx)) : Eigen::VectorXd::Zero(n);
    return c;
  }

 private:
  const std::vector<double>& u_;
  Eigen::Map<const Eigen::VectorXd> j_;
  bool estimate_x0_;
};

void enumerate_sorted(int order, const std::vector<double>& grid, std::vector<double>& current, std::size_t start,
                      const std::function<void(const std::vector<double>&)>& visit) {
  if (static_cast<int>(current.size()) == order) {
    visit(current);
    return;
  }
  for (std::size_t g = start; g < grid.size(); ++g) {
    current.push_back(grid[g]);
    enumerate_sorted(order, grid, current, g, visit);
    current.pop_back();
  }
}

// Pattern search over all 3ⁿ−1 neighbour directions, halving on failure.
Candidate refine(const OutputErrorProblem& prob, Candidate best, double step, double lo, double hi, double tol) {
  const std::size_t n = best.poles.size();
  std::size_t dirs = 1;
  for (std::size_t k = 0; k < n; ++k) dirs *= 3;
  while (step > tol) {
    bool improved = false;
    for (std::size_t d = 0; d < dirs; ++d) {
      std::vector<double> p = best.poles;
      std::size_t code = d;
      bool moved = false;
      for (std::size_t k = 0; k < n; ++k) {
        const int s = static_cast<int>(code % 3) - 1;
        code /= 3;
        if (s) moved = true;
        p[k] = std::clamp(p[k] + s * step, lo, hi);
      }
      if (!moved) continue;
      Candidate c = prob.evaluate(p);
      if (c.sse < best.sse) {
        best = std::move(c);
        improved = true;
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

Candidate fit_order(const OutputErrorProblem& prob, int order, const LtiFitOptions& opts) {
  const double lo = opts.pole_margin;
  const double hi = 1.0 - opts.pole_margin;
  std::vector<double> grid;
  for (double p = lo; p <= hi + 1e-12; p += opts.grid_step) grid.push_back(std::min(p, hi));
  if (grid.back() < hi) grid.push_back(hi);

  Candidate best;
  std::vector<double> cur;
  enumerate_sorted(order, grid, cur, 0, [&](const std::vector<double>& p) {
    Candidate c = prob.evaluate(p);
    if (c.sse < best.sse) best = std::move(c);
  });

  // Nesting: the lower-order optimum plus any extra pole is representable
  // (pole-zero cancellation), which keeps the MSE monotone in order.
  if (order > 1) {
    const Candidate lower = fit_order(prob, order - 1, opts);
    for (double extra : grid) {
      std::vector<double> p = lower.poles;
      p.push_back(extra);
      Candidate c = prob.evaluate(p);
      if (c.sse < best.sse) best = std::move(c);
    }
    best = refine(prob, std::move(best), opts.grid_step / 2.0, lo, hi, opts.tolerance);
    if (!(best.sse < lower.sse)) {
      std::vector<double> p = lower.poles;
      p.push_back(grid.front());
      Candidate embedded = prob.evaluate(p);
      embedded.sse = lower.sse;
      return embedded;
    }
    return best;
  }
  return refine(prob, std::move(best), opts.grid_step / 2.0, lo, hi, opts.tolerance);
}

}  // namespace

std::vector<double> simulate_lti(const AdaptationDynamics& dyn, const Eigen::VectorXd& x0, const std::vector<double>& u) {
  std::vector<double> y;
  y.reserve(u.size());
  Eigen::VectorXd x = x0.size() ? x0 : Eigen::VectorXd::Zero(dyn.order());
  for (double ui : u) {
    LtiStep s = lti_step(dyn, x, ui);
    y.push_back(s.output);
    x = std::move(s.state);
  }
  return y;
}

LtiFit fit_adaptation_lti(const std::vector<double>& u, const std::vector<double>& j, const LtiFitOptions& opts) {
  if (opts.order < 1 || opts.order > 3) throw std::invalid_argument("LTI order must be 1, 2 or 3");
  if (u.size() != j.size()) throw std::invalid_argument("u and J series must have equal length");
  if (u.size() < static_cast<std::size_t>(10 * opts.order)) {
    throw std::invalid_argument("need at least " + std::to_string(10 * opts.order) + " samples for order " +
                                std::to_string(opts.order) + ", got " + std::to_string(u.size()));
  }
  if (!(opts.grid_step > 0.0 && opts.grid_step < 0.5)) throw std::invalid_argument("grid_step must be in (0, 0.5)");
  if (!(opts.pole_margin > 0.0 && opts.pole_margin < 0.5)) throw std::invalid_argument("pole_margin must be in (0, 0.5)");
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i]) || !std::isfinite(j[i])) throw std::invalid_argument("series contain non-finite values");
  }

  const OutputErrorProblem prob(u, j, opts.estimate_initial_state);
  const Candidate best = fit_order(prob, opts.order, opts);

  const std::vector<double> a = denominator(best.poles);
  const auto n = static_cast<Eigen::Index>(a.size());
  // Markov parameters h_k of B/A fill Γ in the shift realization with Ψ = e1.
  Eigen::VectorXd gamma(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    double h = best.b(k);
    for (Eigen::Index m = 1; m <= k; ++m) h -= a[static_cast<std::size_t>(m - 1)] * gamma(k - m);
    gamma(k) = h;
  }
  const AdaptationDynamics raw(companion(a), gamma, Eigen::RowVectorXd::Unit(n, 0));

  LtiFit fit;
  fit.dynamics = normalize_gain(raw);
  fit.poles = best.poles;
  fit.initial_state = best.x0;
  fit.mse = best.sse / static_cast<double>(j.size());
  const double lo = opts.pole_margin;
  const double hi = 1.0 - opts.pole_margin;
  fit.at_constraint = std::any_of(best.poles.begin(), best.poles.end(),
                                  [&](double p) { return p <= lo + 1e-12 || p >= hi - 1e-12; });
  return fit;
}

double whiteness_threshold(std::size_t n, double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("confidence must be in (0, 1)");
  if (n == 0) throw std::invalid_argument("whiteness threshold needs N > 0");
  const boost::math::normal standard;
  const double z = boost::math::quantile(standard, 0.5 + confidence / 2.0);
  return z / std::sqrt(static_cast<double>(n));
}

WhitenessReport whiteness_test(const std::vector<double>& residuals, double confidence, int max_lag) {
  const std::size_t n = residuals.size();
  if (n < 20) throw std::invalid_argument("whiteness test needs at least 20 residuals, got " + std::to_string(n));
  if (max_lag < 1) throw std::invalid_argument("max_lag must be >= 1");

  WhitenessReport rep;
  rep.threshold = whiteness_threshold(n, confidence);
  rep.lags_tested = std::min<int>(max_lag, static_cast<int>(n / 4));

  const double mean = std::accumulate(residuals.begin(), residuals.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double r : residuals) ss += (r - mean) * (r - mean);
  rep.residual_mean = mean;
  rep.residual_std = std::sqrt(ss / static_cast<double>(n - 1));

  double r0 = 0.0;
  for (double r : residuals) r0 += r * r;
  if (r0 == 0.0) {
    rep.passed = true;  // identically zero residuals carry no correlation
    return rep;
  }
  for (int k = 1; k <= rep.lags_tested; ++k) {
    double rk = 0.0;
    for (std::size_t i = static_cast<std::size_t>(k); i < n; ++i) rk += residuals[i] * residuals[i - static_cast<std::size_t>(k)];
    rep.max_normalized_autocorr = std::max(rep.max_normalized_autocorr, std::abs(rk / r0));
  }
  rep.passed = rep.max_normalized_autocorr < rep.threshold;
  return rep;
}

}  // namespace synergy
