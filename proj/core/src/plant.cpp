#include "synergy/plant.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "csv_format.hpp"

namespace synergy {

void ArmGeometry::validate() const {
  if (!(upper_arm_length > 0.0) || !(forearm_plus_hand_length > 0.0)) {
    throw std::invalid_argument("arm segment lengths must be > 0");
  }
  if (!shoulder_position.allFinite()) throw std::invalid_argument("shoulder position must be finite");
}

Eigen::Vector2d ArmGeometry::hand(double q, double beta) const {
  const double f = q + beta;
  return shoulder_position + upper_arm_length * Eigen::Vector2d(std::sin(q), -std::cos(q)) +
         forearm_plus_hand_length * Eigen::Vector2d(std::sin(f), -std::cos(f));
}

std::pair<double, double> ArmGeometry::inverse(const Eigen::Vector2d& target) const {
  const Eigen::Vector2d d = target - shoulder_position;
  const double l1 = upper_arm_length;
  const double l2 = forearm_plus_hand_length;
  const double r = d.norm();
  if (r > l1 + l2 || r < std::abs(l1 - l2)) throw std::domain_error("target outside the arm's workspace");
  const double c = std::clamp((r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
  const double beta = std::acos(c);
  const double direction = std::atan2(d.x(), -d.y());
  const double offset = std::atan2(l2 * std::sin(beta), l1 + l2 * std::cos(beta));
  return {direction - offset, beta};
}

void ReachTask::validate() const {
  if (!start_target.allFinite() || !end_target.allFinite()) throw std::invalid_argument("targets must be finite");
  if (!(time_limit > 0.0)) throw std::invalid_argument("time_limit must be > 0");
  if (!(success_radius > 0.0)) throw std::invalid_argument("success_radius must be > 0");
}

void ShoulderProfile::validate() const {
  if (!(duration > 0.0)) throw std::invalid_argument("profile duration must be > 0");
  if (!(sample_rate > 0.0)) throw std::invalid_argument("profile sample_rate must be > 0");
  if (!std::isfinite(peak_flexion)) throw std::invalid_argument("peak_flexion must be finite");
}

double ShoulderProfile::flexion(double t) const {
  const double tau = std::clamp(t / duration, 0.0, 1.0);
  const double tau3 = tau * tau * tau;
  return peak_flexion * tau3 * (10.0 - 15.0 * tau + 6.0 * tau * tau);
}

ReachOutcome simulate_reach(const ArmGeometry& geometry, const ReachTask& task, double theta,
                            const ShoulderProfile& profile) {
  geometry.validate();
  task.validate();
  profile.validate();
  if (!std::isfinite(theta)) throw std::invalid_argument("theta must be finite");

  constexpr double kStopSpeed = 1.0;  // cm/s
  const auto [q0, beta0] = geometry.inverse(task.start_target);
  const double dt = 1.0 / profile.sample_rate;
  const auto n = static_cast<long>(std::floor(task.time_limit * profile.sample_rate + 1e-9));

  ReachOutcome out;
  out.hand_path.reserve(static_cast<std::size_t>(n) + 1);
  bool moving = false;
  long stop = -1;
  for (long s = 0; s <= n; ++s) {
    const double t = static_cast<double>(s) * dt;
    const double dq = profile.flexion(t);
    // Elbow extends as the shoulder flexes: integral of the synergy law.
    const Eigen::Vector2d p = geometry.hand(q0 + dq, beta0 - theta * dq);
    out.hand_path.push_back({t, p});
    if (s == 0) continue;
    const double speed = (p - out.hand_path[static_cast<std::size_t>(s - 1)].p).norm() / dt;
    if (!moving && speed >= kStopSpeed) {
      moving = true;
    } else if (moving && speed < kStopSpeed) {
      stop = s;
      break;
    }
  }

  if (stop >= 0) {
    out.completion_time = static_cast<double>(stop) * dt;
  } else {
    out.completion_time = task.time_limit;
  }
  out.end_error = (out.hand_path.back().p - task.end_target).norm();
  out.completed = out.end_error <= task.success_radius && out.completion_time <= task.time_limit;
  return out;
}

double objective(double end_error, double completion_time, const ObjectiveWeights& w) {
  const double e2 = end_error * end_error;
  return 0.25 * w.error_max * w.error_max / std::max(0.25, e2) + 16.67 * w.time_max / std::max(0.5, completion_time);
}

double objective(const ReachOutcome& outcome, const ObjectiveWeights& w) {
  return objective(outcome.end_error, outcome.completion_time, w);
}

void write_hand_path_csv(std::ostream& os, const std::vector<HandSample>& path) {
  os << "t,x,y\n";
  for (const auto& s : path) {
    os << detail::format_double(s.t) << ',' << detail::format_double(s.p.x()) << ',' << detail::format_double(s.p.y())
       << '\n';
  }
}

}  // namespace synergy
