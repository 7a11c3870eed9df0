#include "synergy/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <memory>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/algorithm/string.hpp>

#include "csv_format.hpp"
#include "synergy/baseline.hpp"
#include "synergy/plant.hpp"

namespace synergy {

using detail::format_double;
using detail::parse_double;
namespace fs = std::filesystem;

namespace {

const char* const kTraceHeader = "iteration,theta_applied,theta_hat,J,u_theta_f,grad_est,curv_est,branch";

std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::optional<double> parse_optional(const std::string& s) {
  if (boost::trim_copy(s).empty()) return std::nullopt;
  return parse_double(s);
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

// Performance source for one episode: θ in, J out.
std::function<double(double)> make_plant(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.plant == PlantKind::kGreyBox) {
    SubjectSpec spec = cfg.subject;
    spec.noise.seed = seed;
    auto subject = std::make_shared<SimulatedSubject>(std::move(spec));
    return [subject](double theta) { return subject->step(theta); };
  }
  auto rng = std::make_shared<NoiseSource>(MotorNoise{0.0, cfg.kinematic.noise_std, seed});
  const KinematicPlantSpec k = cfg.kinematic;
  return [k, rng](double theta) {
    const ReachOutcome out = simulate_reach(k.geometry, k.task, theta, k.profile);
    return objective(out, k.weights) + rng->next();
  };
}

std::string subject_label(const ExperimentConfig& cfg) {
  return cfg.plant == PlantKind::kGreyBox ? cfg.subject.id : std::string("kinematic");
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Linear-interpolated quantile, q in [0, 1].
double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double f = pos - static_cast<double>(lo);
  if (std::isinf(v[lo]) || std::isinf(v[hi])) return f == 0.0 ? v[lo] : v[hi];
  return v[lo] + f * (v[hi] - v[lo]);
}

double mean_J(const EpisodeTrace& t, std::size_t first, std::size_t last_inclusive) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = first; i <= last_inclusive && i < t.rows.size(); ++i, ++n) s += t.rows[i].J;
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

void write_trace_csv(std::ostream& os, const EpisodeTrace& trace) {
  os << "# config_hash=" << hex64(trace.meta.config_hash) << '\n';
  os << "# seed=" << trace.meta.seed << '\n';
  os << "# subject=" << trace.meta.subject_id << '\n';
  os << "# algorithm=" << trace.meta.algorithm << '\n';
  if (trace.meta.theta_star) os << "# theta_star=" << format_double(*trace.meta.theta_star) << '\n';
  os << kTraceHeader << '\n';
  for (const auto& r : trace.rows) {
    os << r.iteration << ',' << format_double(r.theta_applied) << ',' << format_double(r.theta_hat) << ','
       << format_double(r.J) << ',' << format_optional(r.u_theta_f) << ',' << format_optional(r.grad_est) << ','
       << format_optional(r.curv_est) << ',' << to_string(r.branch) << '\n';
  }
}

EpisodeTrace read_trace_csv(std::istream& is) {
  EpisodeTrace t;
  std::string line;
  bool header_seen = false;
  long lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = boost::trim_copy(line.substr(1, eq - 1));
      const std::string value = boost::trim_copy(line.substr(eq + 1));
      if (key == "config_hash") t.meta.config_hash = std::stoull(value, nullptr, 16);
      else if (key == "seed") t.meta.seed = std::stoull(value);
      else if (key == "subject") t.meta.subject_id = value;
      else if (key == "algorithm") t.meta.algorithm = value;
      else if (key == "theta_star") t.meta.theta_star = parse_double(value);
      continue;
    }
    if (!header_seen) {
      if (line != kTraceHeader) throw std::invalid_argument("unexpected trace header: '" + line + "'");
      header_seen = true;
      continue;
    }
    std::vector<std::string> f;
    boost::split(f, line, boost::is_any_of(","));
    if (f.size() != 8) {
      throw std::invalid_argument("trace line " + std::to_string(lineno) + ": expected 8 fields, got " +
                                  std::to_string(f.size()));
    }
    TraceRow r;
    r.iteration = std::stol(f[0]);
    r.theta_applied = parse_double(f[1]);
    r.theta_hat = parse_double(f[2]);
    r.J = parse_double(f[3]);
    r.u_theta_f = parse_optional(f[4]);
    r.grad_est = parse_optional(f[5]);
    r.curv_est = parse_optional(f[6]);
    r.branch = branch_from_string(boost::trim_copy(f[7]));
    if (r.iteration != static_cast<long>(t.rows.size())) {
      throw std::invalid_argument("trace line " + std::to_string(lineno) + ": iterations must be contiguous from 0");
    }
    t.rows.push_back(r);
  }
  if (!header_seen) throw std::invalid_argument("trace has no header row");
  return t;
}

void save_trace(const std::string& path, const EpisodeTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_trace_csv(out, trace);
}

EpisodeTrace load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  try {
    return read_trace_csv(in);
  } catch (const std::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

std::optional<double> plant_optimum(const ExperimentConfig& cfg) {
  if (cfg.plant == PlantKind::kGreyBox) {
    if (!cfg.subject.map.is_concave()) return std::nullopt;
    return optimal_synergy(cfg.subject.map);
  }
  // Objective saturates, so the argmax is a plateau; report its midpoint.
  const auto& k = cfg.kinematic;
  const auto& b = cfg.personalizer.bounds;
  const double step = 1e-3;
  double best = -std::numeric_limits<double>::infinity();
  double first = b.lo;
  double last = b.lo;
  for (double th = b.lo; th <= b.hi + 1e-12; th += step) {
    const double j = objective(simulate_reach(k.geometry, k.task, th, k.profile), k.weights);
    if (j > best + 1e-9) {
      best = j;
      first = last = th;
    } else if (std::abs(j - best) <= 1e-9 && std::abs(th - last - step) < 1e-9) {
      last = th;
    }
  }
  return 0.5 * (first + last);
}

EpisodeTrace run_episode(const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (cfg.algorithm == Algorithm::kSweep) return run_sweep(cfg, seed);

  EpisodeTrace trace;
  trace.meta = {config_hash(cfg), seed, subject_label(cfg), to_string(cfg.algorithm), plant_optimum(cfg)};
  trace.rows.reserve(static_cast<std::size_t>(cfg.iterations));
  auto plant = make_plant(cfg, seed);

  switch (cfg.algorithm) {
    case Algorithm::kGreyBox: {
      Personalizer es(cfg.personalizer);
      for (int i = 0; i < cfg.iterations; ++i) {
        es.step(plant(es.current_theta()));
        trace.rows.push_back(es.last_row());
      }
      break;
    }
    case Algorithm::kBlackBox: {
      BlackBoxEs es(cfg.baseline);
      for (int i = 0; i < cfg.iterations; ++i) {
        es.step(plant(es.current_theta()));
        trace.rows.push_back(es.last_row());
      }
      break;
    }
    case Algorithm::kFixed: {
      const double th = cfg.personalizer.bounds.clamp(cfg.fixed_theta);
      for (int i = 0; i < cfg.iterations; ++i) {
        TraceRow r;
        r.iteration = i;
        r.theta_applied = r.theta_hat = th;
        r.J = plant(th);
        trace.rows.push_back(r);
      }
      break;
    }
    case Algorithm::kSweep:
      break;
  }
  return trace;
}

double sweep_theta(long i) { return 0.8 + static_cast<double>(i) / 125.0; }

EpisodeTrace run_sweep(const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  EpisodeTrace trace;
  trace.meta = {config_hash(cfg), seed, subject_label(cfg), to_string(Algorithm::kSweep), plant_optimum(cfg)};
  auto plant = make_plant(cfg, seed);
  for (long i = 0; i < kSweepLength; ++i) {
    TraceRow r;
    r.iteration = i;
    r.theta_applied = r.theta_hat = sweep_theta(i);
    r.J = plant(r.theta_applied);
    trace.rows.push_back(r);
  }
  return trace;
}

std::optional<long> convergence_iteration(const EpisodeTrace& trace, double theta_star, double tol,
                                          std::size_t window) {
  std::size_t run = 0;
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    run = std::abs(trace.rows[i].theta_hat - theta_star) < tol ? run + 1 : 0;
    if (run == window) return static_cast<long>(i + 1 - window);
  }
  return std::nullopt;
}

EpisodeSummary summarize_episode(const EpisodeTrace& trace, double theta_star, double tol) {
  if (trace.rows.empty()) throw std::invalid_argument("cannot summarize an empty trace");
  EpisodeSummary s;
  s.seed = trace.meta.seed;
  s.convergence_iteration = convergence_iteration(trace, theta_star, tol);
  const std::size_t n = trace.rows.size();
  const std::size_t tail = std::min<std::size_t>(25, n);
  std::vector<double> last;
  for (std::size_t i = n - tail; i < n; ++i) last.push_back(trace.rows[i].theta_hat);
  s.final25_median_theta_hat = median(last);
  s.final_theta_hat = trace.rows.back().theta_hat;
  s.success = std::abs(s.final_theta_hat - theta_star) < tol;
  s.mean_J_early = mean_J(trace, 9, 33);
  s.mean_J_final25 = mean_J(trace, n - tail, n - 1);
  return s;
}

BatchSummary summarize_batch(const std::vector<EpisodeTrace>& traces, double theta_star) {
  BatchSummary b;
  b.theta_star = theta_star;
  std::vector<double> conv;
  std::vector<double> fin;
  int successes = 0;
  for (const auto& t : traces) {
    EpisodeSummary e = summarize_episode(t, theta_star);
    conv.push_back(e.convergence_iteration ? static_cast<double>(*e.convergence_iteration)
                                           : std::numeric_limits<double>::infinity());
    fin.push_back(e.final25_median_theta_hat);
    successes += e.success ? 1 : 0;
    b.episodes.push_back(e);
  }
  if (!traces.empty()) {
    const double m = median(conv);
    if (std::isfinite(m)) b.median_convergence = m;
    const double q1 = quantile(conv, 0.25);
    const double q3 = quantile(conv, 0.75);
    // Unconverged episodes sit at +∞; an infinite upper quartile makes the spread infinite.
    b.convergence_iqr = std::isinf(q3) ? std::numeric_limits<double>::infinity() : q3 - q1;
    b.median_final25_theta_hat = median(fin);
    b.success_rate = static_cast<double>(successes) / static_cast<double>(traces.size());
  }
  return b;
}

BatchResult run_batch(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto theta_star = plant_optimum(cfg);
  const std::size_t n = cfg.seeds.size();
  std::vector<std::optional<EpisodeTrace>> slots(n);
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::string first_error;

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i] = run_episode(cfg, cfg.seeds[i]);
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mu);
        if (first_error.empty()) first_error = "seed " + std::to_string(cfg.seeds[i]) + ": " + e.what();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, n);
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();

  BatchResult r;
  for (auto& s : slots) {
    if (s) r.traces.push_back(std::move(*s));
  }
  r.summary = summarize_batch(r.traces, theta_star.value_or(std::numeric_limits<double>::quiet_NaN()));
  if (!first_error.empty()) {
    r.summary.partial = true;
    r.summary.error = first_error;
  }
  return r;
}

void write_batch_summary_csv(std::ostream& os, const BatchSummary& s) {
  os << "seed,convergence_iteration,final25_median_theta_hat,final_theta_hat,success,mean_J_early,mean_J_final25\n";
  for (const auto& e : s.episodes) {
    os << e.seed << ',' << (e.convergence_iteration ? std::to_string(*e.convergence_iteration) : std::string()) << ','
       << format_double(e.final25_median_theta_hat) << ',' << format_double(e.final_theta_hat) << ','
       << (e.success ? 1 : 0) << ',' << format_double(e.mean_J_early) << ',' << format_double(e.mean_J_final25)
       << '\n';
  }
  os << "# theta_star=" << format_double(s.theta_star) << '\n';
  os << "# median_convergence=" << (s.median_convergence ? format_double(*s.median_convergence) : "none") << '\n';
  os << "# convergence_iqr=" << format_double(s.convergence_iqr) << '\n';
  os << "# median_final25_theta_hat=" << format_double(s.median_final25_theta_hat) << '\n';
  os << "# success_rate=" << format_double(s.success_rate) << '\n';
  if (s.partial) os << "# partial=" << s.error << '\n';
}

void write_batch_outputs(const std::string& dir, const BatchResult& result) {
  fs::create_directories(dir);
  std::vector<SvgSeries> perf;
  std::vector<SvgSeries> theta;
  for (const auto& t : result.traces) {
    std::ostringstream name;
    name << "trace_" << t.meta.algorithm << '_' << t.meta.subject_id << "_seed" << t.meta.seed << ".csv";
    save_trace((fs::path(dir) / name.str()).string(), t);
    SvgSeries p;
    SvgSeries th;
    for (const auto& r : t.rows) {
      p.x.push_back(static_cast<double>(r.iteration));
      p.y.push_back(r.J);
      th.x.push_back(static_cast<double>(r.iteration));
      th.y.push_back(r.theta_hat);
    }
    perf.push_back(std::move(p));
    theta.push_back(std::move(th));
  }
  {
    std::ofstream out(fs::path(dir) / "summary.csv");
    write_batch_summary_csv(out, result.summary);
  }
  const std::optional<double> ts =
      std::isfinite(result.summary.theta_star) ? std::optional<double>(result.summary.theta_star) : std::nullopt;
  {
    std::ofstream out(fs::path(dir) / "performance.svg");
    write_svg_plot(out, perf, "Performance per iteration", "iteration", "J");
  }
  {
    std::ofstream out(fs::path(dir) / "theta.svg");
    write_svg_plot(out, theta, "Synergy estimate per iteration", "iteration", "theta_hat", ts);
  }
}

CompareReport compare_traces(const std::vector<EpisodeTrace>& first, const std::vector<EpisodeTrace>& second,
                             double theta_star) {
  CompareReport r;
  r.first = summarize_batch(first, theta_star);
  r.second = summarize_batch(second, theta_star);
  r.success_rate_difference = r.first.success_rate - r.second.success_rate;
  return r;
}

void write_compare_report(std::ostream& os, const CompareReport& r, const std::string& first_name,
                          const std::string& second_name) {
  auto conv = [](const BatchSummary& b) {
    return b.median_convergence ? format_double(*b.median_convergence) : std::string("not converged");
  };
  os << "theta_star: " << format_double(r.first.theta_star) << '\n';
  for (const auto& [name, b] : {std::pair{first_name, &r.first}, std::pair{second_name, &r.second}}) {
    os << name << ": episodes=" << b->episodes.size() << " success_rate=" << format_double(b->success_rate)
       << " median_convergence=" << conv(*b) << " median_final25_theta_hat="
       << format_double(b->median_final25_theta_hat) << '\n';
  }
  os << "success_rate_difference (" << first_name << " - " << second_name
     << "): " << format_double(r.success_rate_difference) << '\n';
}

std::vector<EpisodeTrace> load_trace_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw std::invalid_argument("'" + dir + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv" && e.path().filename().string().rfind("trace", 0) == 0) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<EpisodeTrace> out;
  for (const auto& f : files) out.push_back(load_trace(f.string()));
  return out;
}

void write_svg_plot(std::ostream& os, const std::vector<SvgSeries>& series, const std::string& title,
                    const std::string& x_label, const std::string& y_label, std::optional<double> reference) {
  constexpr double W = 720, H = 420, ml = 70, mr = 20, mt = 40, mb = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (reference) {
    y0 = std::min(y0, *reference);
    y1 = std::max(y1, *reference);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };

  static const char* const palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                        "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
     << title << "</text>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double xv = x0 + (x1 - x0) * t / 5.0;
    const double yv = y0 + (y1 - y0) * t / 5.0;
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - mb + 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << std::setprecision(3)
       << std::defaultfloat << xv << std::fixed << std::setprecision(2) << "</text>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << py(yv) + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << std::setprecision(4)
       << std::defaultfloat << yv << std::fixed << std::setprecision(2) << "</text>\n";
  }
  os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label << "</text>\n";
  os << "<text x=\"16\" y=\"" << (mt + H - mb) / 2 << "\" transform=\"rotate(-90 16 " << (mt + H - mb) / 2
     << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << y_label << "</text>\n";
  if (reference) {
    os << "<line x1=\"" << ml << "\" y1=\"" << py(*reference) << "\" x2=\"" << W - mr << "\" y2=\"" << py(*reference)
       << "\" stroke=\"black\" stroke-dasharray=\"6 4\"/>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    os << "<polyline fill=\"none\" stroke-width=\"1.2\" stroke=\"" << palette[k % 10] << "\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (std::isfinite(s.y[i])) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  os << std::defaultfloat;
}

std::vector<IdentificationRecord> read_identification_csv(std::istream& is) {
  std::string line;
  std::map<std::string, std::size_t> col;
  std::vector<IdentificationRecord> out;
  long lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> f;
    boost::split(f, line, boost::is_any_of(","));
    for (auto& s : f) boost::trim(s);
    if (col.empty()) {
      for (std::size_t i = 0; i < f.size(); ++i) col[f[i]] = i;
      for (const char* need : {"iteration", "theta", "performance"}) {
        if (!col.count(need)) throw std::invalid_argument(std::string("identification CSV lacks column '") + need + "'");
      }
      continue;
    }
    if (f.size() < col.size()) throw std::invalid_argument("line " + std::to_string(lineno) + ": too few fields");
    out.push_back({std::stol(f[col["iteration"]]), parse_double(f[col["theta"]]), parse_double(f[col["performance"]])});
  }
  if (col.empty()) throw std::invalid_argument("identification CSV has no header row");
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.iteration < b.iteration; });
  return out;
}

IdentificationReport identify(const std::vector<IdentificationRecord>& data, int selected_order, double confidence) {
  if (selected_order != 2 && selected_order != 3) throw std::invalid_argument("selected order must be 2 or 3");
  // Per-θ means use settled samples only: the first min(10, n/2) samples of
  // each contiguous hold are adaptation transient. Sweeps (holds of one
  // sample) keep everything.
  std::map<double, std::vector<double>> by_theta;
  for (std::size_t start = 0; start < data.size();) {
    std::size_t end = start;
    while (end < data.size() && data[end].theta == data[start].theta) ++end;
    const std::size_t skip = std::min<std::size_t>(10, (end - start) / 2);
    for (std::size_t i = start + skip; i < end; ++i) by_theta[data[i].theta].push_back(data[i].performance);
    start = end;
  }
  std::vector<SteadyStateSample> samples;
  for (const auto& [th, js] : by_theta) {
    const double m = std::accumulate(js.begin(), js.end(), 0.0) / static_cast<double>(js.size());
    double ss = 0.0;
    for (double j : js) ss += (j - m) * (j - m);
    const double sd = js.size() > 1 ? std::sqrt(ss / static_cast<double>(js.size() - 1)) : 0.0;
    samples.push_back({th, m, sd, static_cast<int>(js.size())});
  }

  IdentificationReport rep;
  rep.map = fit_preference_map(samples);
  std::vector<double> u;
  std::vector<double> j;
  for (const auto& r : data) {
    u.push_back(eval_preference(rep.map.map, r.theta));
    j.push_back(r.performance);
  }
  LtiFitOptions o2;
  o2.order = 2;
  LtiFitOptions o3;
  o3.order = 3;
  rep.order2 = fit_adaptation_lti(u, j, o2);
  rep.order3 = fit_adaptation_lti(u, j, o3);
  rep.selected_order = selected_order;
  const LtiFit& sel = selected_order == 2 ? rep.order2 : rep.order3;

  const std::vector<double> yhat = simulate_lti(sel.dynamics, sel.initial_state, u);
  std::vector<double> resid(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) resid[i] = j[i] - yhat[i];
  rep.whiteness = whiteness_test(resid, confidence, selected_order);

  rep.subject.id = "identified";
  rep.subject.map = rep.map.map;
  rep.subject.dynamics = sel.dynamics;
  rep.subject.noise = {rep.whiteness.residual_mean, rep.whiteness.residual_std, 0};
  rep.subject.initial_state = sel.initial_state;
  return rep;
}

void write_identification_report(std::ostream& os, const IdentificationReport& r) {
  auto poles = [](const std::vector<double>& p) {
    std::string s;
    for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ", " : "") + format_double(p[i]);
    return s;
  };
  os << "preference_map.lambda: " << format_vector(r.map.map.lambda) << '\n';
  os << "preference_map.concave: " << (r.map.concave ? "yes" : "NO (strict concavity violated)") << '\n';
  if (r.map.concave) os << "preference_map.theta_star: " << format_double(optimal_synergy(r.map.map)) << '\n';
  os << "order2.mse: " << format_double(r.order2.mse) << '\n';
  os << "order2.poles: " << poles(r.order2.poles) << (r.order2.at_constraint ? " (at constraint)" : "") << '\n';
  os << "order3.mse: " << format_double(r.order3.mse) << '\n';
  os << "order3.poles: " << poles(r.order3.poles) << (r.order3.at_constraint ? " (at constraint)" : "") << '\n';
  os << "selected_order: " << r.selected_order << '\n';
  os << "whiteness.max_normalized_autocorr: " << format_double(r.whiteness.max_normalized_autocorr) << '\n';
  os << "whiteness.threshold: " << format_double(r.whiteness.threshold) << '\n';
  os << "whiteness.lags_tested: " << r.whiteness.lags_tested << '\n';
  os << "whiteness.passed: " << (r.whiteness.passed ? "yes" : "no") << '\n';
  os << "residual.mean: " << format_double(r.whiteness.residual_mean) << '\n';
  os << "residual.std: " << format_double(r.whiteness.residual_std) << '\n';
}

}  // namespace synergy
