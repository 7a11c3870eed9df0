#include "synergy/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "csv_format.hpp"

namespace synergy {

namespace pt = boost::property_tree;
using detail::format_double;
using detail::parse_double;

std::vector<double> parse_vector(const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  std::vector<double> out;
  for (auto& p : parts) {
    boost::trim(p);
    if (p.empty()) continue;
    out.push_back(parse_double(p));
  }
  return out;
}

Eigen::MatrixXd parse_matrix(const std::string& text) {
  std::vector<std::string> rows;
  boost::split(rows, text, boost::is_any_of(";"));
  std::vector<std::vector<double>> values;
  for (auto& r : rows) {
    boost::trim(r);
    if (r.empty()) continue;
    values.push_back(parse_vector(r));
  }
  if (values.empty()) throw std::invalid_argument("empty matrix");
  const auto cols = values.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < values.size(); ++r) {
    if (values[r].size() != cols) throw std::invalid_argument("ragged matrix rows in '" + text + "'");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r][c];
  }
  return m;
}

std::string format_vector(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_double(v[i]);
  }
  return s;
}

std::string format_vector(const Eigen::VectorXd& v) { return format_vector(std::vector<double>(v.data(), v.data() + v.size())); }

std::string format_matrix(const Eigen::MatrixXd& m) {
  std::string s;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r) s += "; ";
    s += format_vector(Eigen::VectorXd(m.row(r).transpose()));
  }
  return s;
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kGreyBox:
      return "greybox";
    case Algorithm::kBlackBox:
      return "blackbox";
    case Algorithm::kSweep:
      return "sweep";
    case Algorithm::kFixed:
      return "fixed";
  }
  return "unknown";
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "greybox") return Algorithm::kGreyBox;
  if (s == "blackbox") return Algorithm::kBlackBox;
  if (s == "sweep") return Algorithm::kSweep;
  if (s == "fixed") return Algorithm::kFixed;
  throw std::invalid_argument("unknown algorithm '" + s + "' (expected greybox|blackbox|sweep|fixed)");
}

std::string to_string(PlantKind p) { return p == PlantKind::kKinematic ? "kinematic" : "greybox"; }

PlantKind plant_kind_from_string(const std::string& s) {
  if (s == "greybox") return PlantKind::kGreyBox;
  if (s == "kinematic") return PlantKind::kKinematic;
  throw std::invalid_argument("unknown plant '" + s + "' (expected greybox|kinematic)");
}

void ExperimentConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("experiment.iterations must be >= 1");
  if (algorithm == Algorithm::kGreyBox && iterations < personalizer.warmup_iterations) {
    throw std::invalid_argument("experiment.iterations must be >= personalizer.warmup_iterations");
  }
  if (seeds.empty()) throw std::invalid_argument("experiment.seeds must list at least one seed");
  if (!std::isfinite(fixed_theta)) throw std::invalid_argument("experiment.fixed_theta must be finite");
  if (plant == PlantKind::kGreyBox) subject.validate();
  if (plant == PlantKind::kKinematic) {
    kinematic.geometry.validate();
    kinematic.task.validate();
    kinematic.profile.validate();
    if (!(kinematic.noise_std >= 0.0)) throw std::invalid_argument("plant.noise_std must be >= 0");
  }
  personalizer.validate();
  baseline.validate();
}

namespace {

class Section {
 public:
  Section(const pt::ptree* tree, std::string name, std::set<std::string> allowed)
      : tree_(tree), name_(std::move(name)) {
    if (!tree_) return;
    for (const auto& [key, value] : *tree_) {
      if (!allowed.count(key)) throw std::invalid_argument("unknown key '" + name_ + "." + key + "'");
    }
  }

  bool has(const std::string& key) const { return tree_ && tree_->get_child_optional(key); }

  std::string text(const std::string& key) const { return tree_->get<std::string>(key); }

  template <typename Fn>
  void read(const std::string& key, Fn&& apply) const {
    if (!has(key)) return;
    try {
      apply(text(key));
    } catch (const std::exception& e) {
      throw std::invalid_argument("field '" + name_ + "." + key + "': " + e.what());
    }
  }

  void number(const std::string& key, double& out) const {
    read(key, [&](const std::string& s) { out = parse_double(s); });
  }

  void integer(const std::string& key, int& out) const {
    read(key, [&](const std::string& s) { out = std::stoi(s); });
  }

  void vec2(const std::string& key, Eigen::Vector2d& out) const {
    read(key, [&](const std::string& s) {
      const auto v = parse_vector(s);
      if (v.size() != 2) throw std::invalid_argument("expected 2 values");
      out = Eigen::Vector2d(v[0], v[1]);
    });
  }

 private:
  const pt::ptree* tree_;
  std::string name_;
};

const pt::ptree* child(const pt::ptree& root, const std::string& name) {
  auto c = root.get_child_optional(name);
  return c ? &*c : nullptr;
}

bool parse_bool(const std::string& s) {
  const std::string l = boost::to_lower_copy(boost::trim_copy(s));
  if (l == "true" || l == "1" || l == "yes") return true;
  if (l == "false" || l == "0" || l == "no") return false;
  throw std::invalid_argument("expected a boolean, got '" + s + "'");
}

SubjectSpec subject_from_section(const pt::ptree* tree, const std::filesystem::path& base_dir, SubjectSpec fallback,
                                 bool require_complete) {
  const Section sec(tree, "subject",
                    {"ref", "id", "lambda", "basis", "phi", "gamma", "psi", "noise_mean", "noise_std", "seed",
                     "initial_state", "normalize_gain"});
  SubjectSpec s = std::move(fallback);
  bool have_ref = false;
  sec.read("ref", [&](const std::string& r) {
    std::filesystem::path p(boost::trim_copy(r));
    if (p.is_relative() && std::filesystem::exists(base_dir / p)) p = base_dir / p;
    s = resolve_subject(p.string());
    have_ref = true;
  });
  if (require_complete && !have_ref) {
    for (const char* key : {"lambda", "phi", "gamma", "psi"}) {
      if (!sec.has(key)) throw std::invalid_argument(std::string("missing field 'subject.") + key + "'");
    }
  }
  Basis basis = s.map.basis;
  sec.read("basis", [&](const std::string& v) { basis = basis_from_string(boost::trim_copy(v)); });
  sec.read("id", [&](const std::string& v) { s.id = boost::trim_copy(v); });
  sec.read("lambda", [&](const std::string& v) { s.map = PreferenceMap(parse_vector(v), basis); });
  if (!sec.has("lambda")) s.map.basis = basis;

  Eigen::MatrixXd phi = s.dynamics.phi();
  Eigen::VectorXd gamma = s.dynamics.gamma();
  Eigen::RowVectorXd psi = s.dynamics.psi();
  sec.read("phi", [&](const std::string& v) { phi = parse_matrix(v); });
  sec.read("gamma", [&](const std::string& v) {
    const auto g = parse_vector(v);
    gamma = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
  });
  sec.read("psi", [&](const std::string& v) {
    const auto p = parse_vector(v);
    psi = Eigen::Map<const Eigen::RowVectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
  });
  try {
    s.dynamics = AdaptationDynamics(phi, gamma, psi);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("fields 'subject.phi/gamma/psi': ") + e.what());
  }
  sec.number("noise_mean", s.noise.mean);
  sec.number("noise_std", s.noise.std_dev);
  sec.read("seed", [&](const std::string& v) { s.noise.seed = std::stoull(v); });
  sec.read("initial_state", [&](const std::string& v) {
    const auto x = parse_vector(v);
    s.initial_state = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  });
  sec.read("normalize_gain", [&](const std::string& v) {
    if (parse_bool(v)) s.dynamics = normalize_gain(s.dynamics);
  });
  s.validate();
  return s;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  std::vector<std::uint64_t> out;
  for (auto& p : parts) {
    boost::trim(p);
    if (p.empty()) continue;
    const auto dash = p.find('-', 1);
    if (dash != std::string::npos) {
      const auto lo = std::stoull(p.substr(0, dash));
      const auto hi = std::stoull(p.substr(dash + 1));
      if (hi < lo) throw std::invalid_argument("descending seed range '" + p + "'");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    } else {
      out.push_back(std::stoull(p));
    }
  }
  return out;
}

ExperimentConfig config_from_tree(const pt::ptree& root, const std::filesystem::path& base_dir) {
  for (const auto& [name, _] : root) {
    static const std::set<std::string> sections{"experiment", "subject", "personalizer", "baseline", "plant"};
    if (!sections.count(name)) throw std::invalid_argument("unknown section '[" + name + "]'");
  }
  ExperimentConfig c;

  const Section ex(child(root, "experiment"), "experiment",
                   {"algorithm", "plant", "iterations", "seeds", "output_dir", "fixed_theta"});
  ex.read("algorithm", [&](const std::string& v) { c.algorithm = algorithm_from_string(boost::trim_copy(v)); });
  ex.read("plant", [&](const std::string& v) { c.plant = plant_kind_from_string(boost::trim_copy(v)); });
  ex.integer("iterations", c.iterations);
  ex.read("seeds", [&](const std::string& v) { c.seeds = parse_seeds(v); });
  ex.read("output_dir", [&](const std::string& v) { c.output_dir = boost::trim_copy(v); });
  ex.number("fixed_theta", c.fixed_theta);

  if (const auto* sub = child(root, "subject")) {
    c.subject = subject_from_section(sub, base_dir, c.subject, false);
  }

  const Section pe(child(root, "personalizer"), "personalizer",
                   {"omega_o", "n_harmonic", "a", "k", "epsilon", "H", "Q", "L", "theta_0", "theta_min", "theta_max",
                    "warmup_iterations", "dither", "observer"});
  auto& p = c.personalizer;
  pe.number("omega_o", p.omega_o);
  pe.integer("n_harmonic", p.n_harmonic);
  pe.number("a", p.a);
  pe.number("k", p.k);
  pe.number("epsilon", p.epsilon);
  pe.number("H", p.H);
  pe.number("Q", p.Q);
  pe.read("L", [&](const std::string& v) {
    const auto l = parse_vector(v);
    if (l.size() != 5) throw std::invalid_argument("expected 5 values");
    p.L = Eigen::Map<const Eigen::Matrix<double, 5, 1>>(l.data());
  });
  pe.number("theta_0", p.theta_0);
  pe.number("theta_min", p.bounds.lo);
  pe.number("theta_max", p.bounds.hi);
  pe.integer("warmup_iterations", p.warmup_iterations);
  pe.read("dither", [&](const std::string& v) { p.dither_mode = dither_mode_from_string(boost::trim_copy(v)); });
  pe.read("observer", [&](const std::string& v) { p.observer_form = observer_form_from_string(boost::trim_copy(v)); });

  const Section ba(child(root, "baseline"), "baseline",
                   {"omega_o", "a", "k", "theta_0", "theta_min", "theta_max", "highpass_ratio"});
  auto& b = c.baseline;
  ba.number("omega_o", b.omega_o);
  ba.number("a", b.a);
  ba.number("k", b.k);
  ba.number("theta_0", b.theta_0);
  ba.number("theta_min", b.bounds.lo);
  ba.number("theta_max", b.bounds.hi);
  ba.number("highpass_ratio", b.highpass_ratio);

  const Section pl(child(root, "plant"), "plant",
                   {"upper_arm", "forearm", "shoulder", "start_target", "end_target", "time_limit", "success_radius",
                    "peak_flexion", "duration", "sample_rate", "noise_std"});
  auto& k = c.kinematic;
  pl.number("upper_arm", k.geometry.upper_arm_length);
  pl.number("forearm", k.geometry.forearm_plus_hand_length);
  pl.vec2("shoulder", k.geometry.shoulder_position);
  pl.vec2("start_target", k.task.start_target);
  pl.vec2("end_target", k.task.end_target);
  pl.number("time_limit", k.task.time_limit);
  pl.number("success_radius", k.task.success_radius);
  pl.number("peak_flexion", k.profile.peak_flexion);
  pl.number("duration", k.profile.duration);
  pl.number("sample_rate", k.profile.sample_rate);
  pl.number("noise_std", k.noise_std);

  if (!ex.has("fixed_theta")) c.fixed_theta = p.theta_0;
  c.validate();
  return c;
}

pt::ptree read_ini(std::istream& is) {
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("malformed config: ") + e.what());
  }
  return tree;
}

}  // namespace

SubjectSpec parse_subject(std::istream& is) {
  const pt::ptree tree = read_ini(is);
  const auto* sub = child(tree, "subject");
  if (!sub) throw std::invalid_argument("subject file has no [subject] section");
  return subject_from_section(sub, std::filesystem::current_path(), SubjectSpec{}, true);
}

SubjectSpec load_subject_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open subject file '" + path + "'");
  const pt::ptree tree = read_ini(in);
  const auto* sub = child(tree, "subject");
  if (!sub) throw std::invalid_argument("subject file '" + path + "' has no [subject] section");
  return subject_from_section(sub, std::filesystem::path(path).parent_path(), SubjectSpec{}, true);
}

void write_subject(std::ostream& os, const SubjectSpec& s) {
  os << "[subject]\n";
  os << "id = " << s.id << '\n';
  os << "basis = " << to_string(s.map.basis) << '\n';
  os << "lambda = " << format_vector(s.map.lambda) << '\n';
  os << "phi = " << format_matrix(s.dynamics.phi()) << '\n';
  os << "gamma = " << format_vector(s.dynamics.gamma()) << '\n';
  os << "psi = " << format_vector(Eigen::VectorXd(s.dynamics.psi().transpose())) << '\n';
  os << "noise_mean = " << format_double(s.noise.mean) << '\n';
  os << "noise_std = " << format_double(s.noise.std_dev) << '\n';
  os << "seed = " << s.noise.seed << '\n';
  if (s.initial_state.size()) os << "initial_state = " << format_vector(s.initial_state) << '\n';
}

SubjectSpec resolve_subject(const std::string& id_or_path) {
  const std::string key = boost::to_upper_copy(boost::trim_copy(id_or_path));
  if (key == "A" || key == "B") return reference_subject(key);
  if (!std::filesystem::exists(id_or_path)) {
    throw std::invalid_argument("subject '" + id_or_path + "' is neither A, B nor an existing file");
  }
  return load_subject_file(id_or_path);
}

ExperimentConfig parse_experiment_config(std::istream& is) {
  return config_from_tree(read_ini(is), std::filesystem::current_path());
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  return config_from_tree(read_ini(in), std::filesystem::path(path).parent_path());
}

void write_experiment_config(std::ostream& os, const ExperimentConfig& c) {
  os << "[experiment]\n";
  os << "algorithm = " << to_string(c.algorithm) << '\n';
  os << "plant = " << to_string(c.plant) << '\n';
  os << "iterations = " << c.iterations << '\n';
  os << "seeds = ";
  for (std::size_t i = 0; i < c.seeds.size(); ++i) os << (i ? ", " : "") << c.seeds[i];
  os << '\n';
  os << "output_dir = " << c.output_dir << '\n';
  os << "fixed_theta = " << format_double(c.fixed_theta) << "\n\n";

  write_subject(os, c.subject);
  os << '\n';

  const auto& p = c.personalizer;
  os << "[personalizer]\n";
  os << "omega_o = " << format_double(p.omega_o) << '\n';
  os << "n_harmonic = " << p.n_harmonic << '\n';
  os << "a = " << format_double(p.a) << '\n';
  os << "k = " << format_double(p.k) << '\n';
  os << "epsilon = " << format_double(p.epsilon) << '\n';
  os << "H = " << format_double(p.H) << '\n';
  os << "Q = " << format_double(p.Q) << '\n';
  os << "L = " << format_vector(Eigen::VectorXd(p.L)) << '\n';
  os << "theta_0 = " << format_double(p.theta_0) << '\n';
  os << "theta_min = " << format_double(p.bounds.lo) << '\n';
  os << "theta_max = " << format_double(p.bounds.hi) << '\n';
  os << "warmup_iterations = " << p.warmup_iterations << '\n';
  os << "dither = " << to_string(p.dither_mode) << '\n';
  os << "observer = " << to_string(p.observer_form) << "\n\n";

  const auto& b = c.baseline;
  os << "[baseline]\n";
  os << "omega_o = " << format_double(b.omega_o) << '\n';
  os << "a = " << format_double(b.a) << '\n';
  os << "k = " << format_double(b.k) << '\n';
  os << "theta_0 = " << format_double(b.theta_0) << '\n';
  os << "theta_min = " << format_double(b.bounds.lo) << '\n';
  os << "theta_max = " << format_double(b.bounds.hi) << '\n';
  os << "highpass_ratio = " << format_double(b.highpass_ratio) << "\n\n";

  const auto& k = c.kinematic;
  auto v2 = [](const Eigen::Vector2d& v) { return format_double(v.x()) + ", " + format_double(v.y()); };
  os << "[plant]\n";
  os << "upper_arm = " << format_double(k.geometry.upper_arm_length) << '\n';
  os << "forearm = " << format_double(k.geometry.forearm_plus_hand_length) << '\n';
  os << "shoulder = " << v2(k.geometry.shoulder_position) << '\n';
  os << "start_target = " << v2(k.task.start_target) << '\n';
  os << "end_target = " << v2(k.task.end_target) << '\n';
  os << "time_limit = " << format_double(k.task.time_limit) << '\n';
  os << "success_radius = " << format_double(k.task.success_radius) << '\n';
  os << "peak_flexion = " << format_double(k.profile.peak_flexion) << '\n';
  os << "duration = " << format_double(k.profile.duration) << '\n';
  os << "sample_rate = " << format_double(k.profile.sample_rate) << '\n';
  os << "noise_std = " << format_double(k.noise_std) << '\n';
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  std::ostringstream os;
  write_experiment_config(os, c);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace synergy
