#pragma once

// INI-style experiment and subject configuration.
//
//   [experiment]   algorithm, plant, iterations, seeds, output_dir, fixed_theta
//   [subject]      id, lambda, basis, phi, gamma, psi, noise_mean, noise_std,
//                  seed, initial_state, normalize_gain
//   [personalizer] omega_o, n_harmonic, a, k, epsilon, H, Q, L, theta_0,
//                  theta_min, theta_max, warmup_iterations, dither, observer
//   [baseline]     omega_o, a, k, theta_0, theta_min, theta_max, highpass_ratio
//   [plant]        upper_arm, forearm, shoulder, start_target, end_target,
//                  time_limit, success_radius, peak_flexion, duration,
//                  sample_rate, noise_std
//
// Vectors are comma-separated; matrix rows are separated by ';'.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "synergy/baseline.hpp"
#include "synergy/model.hpp"
#include "synergy/personalizer.hpp"
#include "synergy/plant.hpp"

namespace synergy {

std::vector<double> parse_vector(const std::string& text);
Eigen::MatrixXd parse_matrix(const std::string& text);
std::string format_vector(const std::vector<double>& v);
std::string format_vector(const Eigen::VectorXd& v);
std::string format_matrix(const Eigen::MatrixXd& m);

enum class Algorithm { kGreyBox, kBlackBox, kSweep, kFixed };
enum class PlantKind { kGreyBox, kKinematic };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);
std::string to_string(PlantKind p);
PlantKind plant_kind_from_string(const std::string& s);

struct KinematicPlantSpec {
  ArmGeometry geometry;
  ReachTask task;
  ShoulderProfile profile;
  ObjectiveWeights weights;
  double noise_std = 0.0;
};

struct ExperimentConfig {
  PlantKind plant = PlantKind::kGreyBox;
  SubjectSpec subject = reference_subject_a();
  KinematicPlantSpec kinematic;
  Algorithm algorithm = Algorithm::kGreyBox;
  int iterations = 150;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "out";
  double fixed_theta = 1.0;
  PersonalizerConfig personalizer;
  BaselineConfig baseline;

  /// Reports the offending field name in the exception message.
  void validate() const;
};

/// Reads a subject definition from the [subject] section of an INI stream.
SubjectSpec parse_subject(std::istream& is);
SubjectSpec load_subject_file(const std::string& path);
void write_subject(std::ostream& os, const SubjectSpec& s);

/// "A", "B", or a path to a subject INI file.
SubjectSpec resolve_subject(const std::string& id_or_path);

/// Missing sections and keys keep their defaults; unknown keys are errors.
ExperimentConfig parse_experiment_config(std::istream& is);
ExperimentConfig load_experiment_config(const std::string& path);

/// Canonical, complete text form; parse(write(c)) reproduces c.
void write_experiment_config(std::ostream& os, const ExperimentConfig& c);

/// FNV-1a over the canonical text.
std::uint64_t config_hash(const ExperimentConfig& c);

}  // namespace synergy
