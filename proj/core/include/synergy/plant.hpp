#pragma once

// Planar two-link reaching plant. The shoulder follows a prescribed profile
// and the prosthetic elbow is slaved to it through the synergy ratio θ.

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace synergy {

/// Sagittal-plane arm, x forward and y up, angles measured from hanging down.
struct ArmGeometry {
  double upper_arm_length = 30.0;         // cm
  double forearm_plus_hand_length = 35.0;  // cm
  Eigen::Vector2d shoulder_position = Eigen::Vector2d::Zero();

  void validate() const;

  /// Hand position for shoulder flexion q and elbow flexion beta (rad).
  Eigen::Vector2d hand(double q, double beta) const;

  /// Elbow-flexed inverse kinematics. Throws std::domain_error when the
  /// point is out of reach.
  std::pair<double, double> inverse(const Eigen::Vector2d& hand) const;
};

struct ReachTask {
  Eigen::Vector2d start_target{30.0, -5.0};  // cm
  Eigen::Vector2d end_target{53.0, -5.0};    // cm
  double time_limit = 3.0;                   // s
  double success_radius = 5.0;               // cm

  void validate() const;
};

enum class ProfileKind { kMinimumJerk };

struct ShoulderProfile {
  ProfileKind kind = ProfileKind::kMinimumJerk;
  double peak_flexion = 0.64;  // rad, total shoulder excursion
  double duration = 1.0;       // s
  double sample_rate = 90.0;   // Hz

  void validate() const;

  /// Flexion added to the start posture at time t.
  double flexion(double t) const;
};

struct HandSample {
  double t = 0.0;
  Eigen::Vector2d p = Eigen::Vector2d::Zero();
};

struct ReachOutcome {
  double end_error = 0.0;        // cm
  double completion_time = 0.0;  // s
  bool completed = false;
  std::vector<HandSample> hand_path;
};

/// Stop time is the first sample after motion onset where hand speed drops
/// below 1 cm/s; without a stop the time limit is used.
ReachOutcome simulate_reach(const ArmGeometry& geometry, const ReachTask& task, double theta,
                            const ShoulderProfile& profile);

struct ObjectiveWeights {
  double error_max = 10.0;  // cm
  double time_max = 3.0;    // s
};

/// 0.25·e_max²/max(0.25, e²) + 16.67·t_max/max(0.5, t_f).
double objective(double end_error, double completion_time, const ObjectiveWeights& w = {});
double objective(const ReachOutcome& outcome, const ObjectiveWeights& w = {});

void write_hand_path_csv(std::ostream& os, const std::vector<HandSample>& path);

}  // namespace synergy
