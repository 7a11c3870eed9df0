#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "synergy/config.hpp"
#include "synergy/harness.hpp"
#include "synergy/plant.hpp"

namespace fs = std::filesystem;
using namespace synergy;

namespace {

struct CommonOptions {
  std::string config;
  std::string seeds;
  std::string out;
  std::string algorithm;
  std::string subject;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_algorithm) {
  cmd->add_option("--config", o.config, "INI experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seeds, "Seed, comma list, or range a-b");
  cmd->add_option("--out", o.out, "Output directory");
  if (with_algorithm) {
    cmd->add_option("--algorithm", o.algorithm, "greybox|blackbox|sweep|fixed")
        ->check(CLI::IsMember({"greybox", "blackbox", "sweep", "fixed"}));
  }
  cmd->add_option("--subject", o.subject, "Reference subject A|B or a subject INI file");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  // Reuse the config parser so CLI and file accept the same syntax.
  std::istringstream is("[experiment]\nseeds = " + text + "\n");
  return parse_experiment_config(is).seeds;
}

ExperimentConfig build_config(const CommonOptions& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_experiment_config(o.config);
  if (!o.subject.empty()) {
    c.subject = resolve_subject(o.subject);
    c.plant = PlantKind::kGreyBox;
  }
  if (!o.algorithm.empty()) c.algorithm = algorithm_from_string(o.algorithm);
  if (!o.seeds.empty()) c.seeds = parse_seed_list(o.seeds);
  if (!o.out.empty()) c.output_dir = o.out;
  c.validate();
  return c;
}

std::string trace_name(const EpisodeTrace& t) {
  return "trace_" + t.meta.algorithm + "_" + t.meta.subject_id + "_seed" + std::to_string(t.meta.seed) + ".csv";
}

void print_episode(const EpisodeTrace& t, const fs::path& file) {
  std::cout << "wrote " << file.string() << " (" << t.rows.size() << " iterations)\n";
  if (t.meta.theta_star && t.meta.algorithm != "sweep") {
    const EpisodeSummary s = summarize_episode(t, *t.meta.theta_star);
    std::cout << "theta_star=" << *t.meta.theta_star << " final_theta_hat=" << s.final_theta_hat
              << " final25_median=" << s.final25_median_theta_hat << " converged_at="
              << (s.convergence_iteration ? std::to_string(*s.convergence_iteration) : "never") << '\n';
  }
}

int cmd_run(const CommonOptions& o, bool sweep) {
  ExperimentConfig c = build_config(o);
  if (sweep) c.algorithm = Algorithm::kSweep;
  fs::create_directories(c.output_dir);
  for (auto seed : c.seeds) {
    const EpisodeTrace t = run_episode(c, seed);
    const fs::path file = fs::path(c.output_dir) / trace_name(t);
    save_trace(file.string(), t);
    print_episode(t, file);
    if (!sweep) break;  // run is a single episode
  }
  return 0;
}

int cmd_batch(const CommonOptions& o) {
  const ExperimentConfig c = build_config(o);
  const BatchResult r = run_batch(c);
  write_batch_outputs(c.output_dir, r);
  write_batch_summary_csv(std::cout, r.summary);
  if (r.summary.partial) {
    std::cerr << "batch aborted: " << r.summary.error << '\n';
    return 1;
  }
  return 0;
}

int cmd_identify(const std::string& input, const std::string& out, int order, double confidence) {
  std::ifstream in(input);
  if (!in) throw std::runtime_error("cannot read '" + input + "'");
  const IdentificationReport rep = identify(read_identification_csv(in), order, confidence);
  fs::create_directories(out);
  {
    std::ofstream f(fs::path(out) / "identification.txt");
    write_identification_report(f, rep);
  }
  {
    std::ofstream f(fs::path(out) / "subject.ini");
    write_subject(f, rep.subject);
  }
  write_identification_report(std::cout, rep);
  std::cout << "wrote " << (fs::path(out) / "identification.txt").string() << " and "
            << (fs::path(out) / "subject.ini").string() << '\n';
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b, std::optional<double> theta_star, const std::string& out) {
  const auto first = load_trace_dir(a);
  const auto second = load_trace_dir(b);
  if (first.empty() || second.empty()) throw std::invalid_argument("both trace sets must contain trace*.csv files");
  if (!theta_star) theta_star = first.front().meta.theta_star;
  if (!theta_star) throw std::invalid_argument("traces carry no theta_star; pass --theta-star");
  const CompareReport r = compare_traces(first, second, *theta_star);
  write_compare_report(std::cout, r, a, b);
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream f(fs::path(out) / "compare.txt");
    write_compare_report(f, r, a, b);
  }
  return 0;
}

int cmd_reach(const CommonOptions& o, double theta) {
  const ExperimentConfig c = build_config(o);
  const auto& k = c.kinematic;
  const ReachOutcome r = simulate_reach(k.geometry, k.task, theta, k.profile);
  fs::create_directories(c.output_dir);
  const fs::path file = fs::path(c.output_dir) / "hand_path.csv";
  std::ofstream f(file);
  write_hand_path_csv(f, r.hand_path);
  std::cout << "end_error_cm=" << r.end_error << " completion_time_s=" << r.completion_time
            << " completed=" << (r.completed ? "yes" : "no") << " J=" << objective(r, k.weights) << '\n'
            << "wrote " << file.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grey-box extremum seeking for prosthesis synergy personalization"};
  app.require_subcommand(1);

  CommonOptions run_o, sweep_o, batch_o, reach_o;
  auto* run = app.add_subcommand("run", "Run a single episode");
  add_common(run, run_o, true);
  auto* sweep = app.add_subcommand("sweep", "Synergy sweep theta_i = 0.8 + i/125, i = 0..200");
  add_common(sweep, sweep_o, false);
  auto* batch = app.add_subcommand("batch", "Monte Carlo batch over the seed list");
  add_common(batch, batch_o, true);

  std::string id_input, id_out = "out";
  int id_order = 2;
  double id_conf = 0.95;
  auto* ident = app.add_subcommand("identify", "Identify a grey-box subject from iteration,theta,performance CSV");
  ident->add_option("input", id_input, "Input CSV")->required()->check(CLI::ExistingFile);
  ident->add_option("--out", id_out, "Output directory");
  ident->add_option("--order", id_order, "Selected LTI order")->check(CLI::IsMember({2, 3}));
  ident->add_option("--confidence", id_conf, "Whiteness confidence level")->check(CLI::Range(0.5, 0.9999));

  std::string cmp_a, cmp_b, cmp_out;
  std::optional<double> cmp_theta;
  auto* cmp = app.add_subcommand("compare", "Differential report between two trace directories");
  cmp->add_option("first", cmp_a, "First trace directory")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("second", cmp_b, "Second trace directory")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("--theta-star", cmp_theta, "Optimum used for success (default: from trace metadata)");
  cmp->add_option("--out", cmp_out, "Write compare.txt here");

  double reach_theta = 1.0;
  auto* reach = app.add_subcommand("reach", "Simulate one kinematic reach and export the hand path");
  add_common(reach, reach_o, false);
  reach->add_option("--theta", reach_theta, "Synergy ratio");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_o, false);
    if (*sweep) return cmd_run(sweep_o, true);
    if (*batch) return cmd_batch(batch_o);
    if (*ident) return cmd_identify(id_input, id_out, id_order, id_conf);
    if (*cmp) return cmd_compare(cmp_a, cmp_b, cmp_theta, cmp_out);
    if (*reach) return cmd_reach(reach_o, reach_theta);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
