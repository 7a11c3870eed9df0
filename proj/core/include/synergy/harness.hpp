#pragma once

// Experiment orchestration: episodes, sweeps, Monte Carlo batches, trace
// persistence and plot emission.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "synergy/config.hpp"
#include "synergy/personalizer.hpp"
#include "synergy/sysid.hpp"

namespace synergy {

struct TraceMetadata {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string subject_id;
  std::string algorithm;
  std::optional<double> theta_star;

  bool operator==(const TraceMetadata&) const = default;
};

struct EpisodeTrace {
  TraceMetadata meta;
  std::vector<TraceRow> rows;

  bool operator==(const EpisodeTrace&) const = default;
};

/// Header row plus one line per row; metadata goes in leading '#' lines.
void write_trace_csv(std::ostream& os, const EpisodeTrace& trace);
EpisodeTrace read_trace_csv(std::istream& is);
void save_trace(const std::string& path, const EpisodeTrace& trace);
EpisodeTrace load_trace(const std::string& path);

/// θ* of the configured plant when known (quadratic grey-box subject, or a
/// grid search over the kinematic objective).
std::optional<double> plant_optimum(const ExperimentConfig& cfg);

/// Runs one closed-loop episode for the given seed.
EpisodeTrace run_episode(const ExperimentConfig& cfg, std::uint64_t seed);

/// θ_i = 0.8 + i/125 for i = 0..200 (θ clamped to the personalizer bounds).
double sweep_theta(long i);
constexpr long kSweepLength = 201;
EpisodeTrace run_sweep(const ExperimentConfig& cfg, std::uint64_t seed);

struct EpisodeSummary {
  std::uint64_t seed = 0;
  std::optional<long> convergence_iteration;
  double final25_median_theta_hat = 0.0;
  double final_theta_hat = 0.0;
  bool success = false;
  double mean_J_early = 0.0;  // iterations 9..33
  double mean_J_final25 = 0.0;
};

/// First i with |θ̂ − θ*| < tol for `window` consecutive rows.
std::optional<long> convergence_iteration(const EpisodeTrace& trace, double theta_star, double tol = 0.1,
                                          std::size_t window = 25);
EpisodeSummary summarize_episode(const EpisodeTrace& trace, double theta_star, double tol = 0.1);

struct BatchSummary {
  std::vector<EpisodeSummary> episodes;
  std::optional<double> median_convergence;  // unconverged episodes count as +∞
  double convergence_iqr = 0.0;
  double median_final25_theta_hat = 0.0;
  double success_rate = 0.0;
  double theta_star = 0.0;
  bool partial = false;  // an episode failed; episodes holds the completed ones
  std::string error;
};

/// Pure aggregation of per-episode traces.
BatchSummary summarize_batch(const std::vector<EpisodeTrace>& traces, double theta_star);

struct BatchResult {
  std::vector<EpisodeTrace> traces;
  BatchSummary summary;
};

/// Runs every seed in cfg.seeds. Episodes run in parallel; aggregation
/// happens after all of them finish.
BatchResult run_batch(const ExperimentConfig& cfg);

void write_batch_summary_csv(std::ostream& os, const BatchSummary& s);

/// Writes traces, summary.csv, performance.svg and theta.svg under dir.
void write_batch_outputs(const std::string& dir, const BatchResult& result);

struct CompareReport {
  BatchSummary first;
  BatchSummary second;
  double success_rate_difference = 0.0;  // first − second
};

CompareReport compare_traces(const std::vector<EpisodeTrace>& first, const std::vector<EpisodeTrace>& second,
                             double theta_star);
void write_compare_report(std::ostream& os, const CompareReport& r, const std::string& first_name,
                          const std::string& second_name);

/// Every *.csv trace in a directory, sorted by file name.
std::vector<EpisodeTrace> load_trace_dir(const std::string& dir);

struct SvgSeries {
  std::vector<double> x;
  std::vector<double> y;
};

/// Line chart with optional horizontal reference line.
void write_svg_plot(std::ostream& os, const std::vector<SvgSeries>& series, const std::string& title,
                    const std::string& x_label, const std::string& y_label, std::optional<double> reference = {});

struct IdentificationRecord {
  long iteration = 0;
  double theta = 0.0;
  double performance = 0.0;
};

std::vector<IdentificationRecord> read_identification_csv(std::istream& is);

struct IdentificationReport {
  PreferenceFit map;
  LtiFit order2;
  LtiFit order3;
  int selected_order = 2;
  WhitenessReport whiteness;
  SubjectSpec subject;
};

/// Map from per-θ means of settled samples, then constrained LTI fits of orders 2 and 3 on the
/// mapped input, whiteness check of the selected model's residuals.
IdentificationReport identify(const std::vector<IdentificationRecord>& data, int selected_order = 2,
                              double confidence = 0.95);
void write_identification_report(std::ostream& os, const IdentificationReport& r);

}  // namespace synergy
