#include "vem/run_config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "vem/problems.hpp"

namespace vem {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + t + "'");
  }
  if (used != t.size()) throw std::invalid_argument("not a number: '" + t + "'");
  return v;
}

bool parse_bool(const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "on" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "off" || t == "0" || t == "no") return false;
  throw std::invalid_argument("not a boolean: '" + t + "'");
}

// Splits "a, [b, c], d" at top-level commas.
std::vector<std::string> split_top_level(const std::string& s) {
  std::vector<std::string> parts;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '[') ++depth;
    if (c == ']') --depth;
    if (c == ',' && depth == 0) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !parts.empty()) parts.push_back(trim(cur));
  return parts;
}

std::string strip_brackets(const std::string& value) {
  const std::string t = trim(value);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']') {
    throw std::invalid_argument("expected a bracketed list: '" + t + "'");
  }
  return t.substr(1, t.size() - 2);
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), Eigen::Index(v.size()));
}

Matrix expand(const Matrix& gain, int dim) {
  if (gain.rows() == 1 && gain.cols() == 1 && dim != 1) {
    return gain(0, 0) * Matrix::Identity(dim, dim);
  }
  return gain;
}

struct Dims {
  int n;
  int m;
};

Dims dims_of(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::kExample1: return {2, 1};
    case ProblemKind::kExample2: return {3, 1};
    case ProblemKind::kCovDemo: return {1, 0};
  }
  return {0, 0};
}

}  // namespace

std::optional<ProblemKind> parse_problem_kind(const std::string& name) {
  if (name == "example1") return ProblemKind::kExample1;
  if (name == "example2") return ProblemKind::kExample2;
  if (name == "cov-demo") return ProblemKind::kCovDemo;
  return std::nullopt;
}

const char* to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::kExample1: return "example1";
    case ProblemKind::kExample2: return "example2";
    case ProblemKind::kCovDemo: return "cov-demo";
  }
  return "unknown";
}

RunConfig RunConfig::defaults(ProblemKind kind) {
  RunConfig c;
  c.problem = kind;
  c.K_f = Matrix::Constant(1, 1, 0.1);
  c.K_x0 = Matrix::Constant(1, 1, 0.1);
  c.integrator.stop_on_convergence = false;
  c.integrator.snapshot_times = {0, 1, 3, 10, 30, 100, 300};
  switch (kind) {
    case ProblemKind::kExample1:
      c.N = 61;
      c.K = Matrix::Constant(1, 1, 2e-2);
      c.tf_guess = 3.0;
      break;
    case ProblemKind::kExample2:
      c.N = 51;
      c.K = Matrix::Constant(1, 1, 2e-6);
      c.k_tf = 2e-4;
      c.tf_guess = 25.0;
      break;
    case ProblemKind::kCovDemo:
      c.N = 41;
      c.K = Matrix::Constant(1, 1, 1.0);
      c.tf_guess = 1.0;
      c.integrator.tau_max = 2.0;
      c.integrator.snapshot_times = {0, 0.01, 0.03, 0.1, 0.3, 1, 2};
      break;
  }
  return c;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("line " + std::to_string(number) +
                                  ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw std::invalid_argument("line " + std::to_string(number) +
                                  ": empty key");
    }
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::vector<double> parse_list(const std::string& value) {
  std::vector<double> v;
  for (const auto& part : split_top_level(strip_brackets(value))) {
    v.push_back(parse_number(part));
  }
  return v;
}

Matrix parse_matrix(const std::string& value) {
  const std::string t = trim(value);
  if (t.empty() || t.front() != '[') {
    return Matrix::Constant(1, 1, parse_number(t));
  }
  const auto parts = split_top_level(strip_brackets(t));
  if (parts.empty()) throw std::invalid_argument("empty matrix");
  if (parts.front().empty() || parts.front().front() != '[') {
    const auto row = parse_list(t);
    return to_vector(row).transpose();
  }
  std::vector<std::vector<double>> rows;
  for (const auto& p : parts) rows.push_back(parse_list(p));
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) {
      throw std::invalid_argument("matrix rows differ in length");
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

void apply_key_values(RunConfig& c,
                      const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    try {
      if (key == "problem") {
        const auto kind = parse_problem_kind(value);
        if (!kind) throw std::invalid_argument("unknown problem");
        c.problem = *kind;
      } else if (key == "N") {
        const double n = parse_number(value);
        if (n != static_cast<int>(n)) throw std::invalid_argument("not an integer");
        c.N = static_cast<int>(n);
      } else if (key == "K") {
        c.K = parse_matrix(value);
      } else if (key == "K_f") {
        c.K_f = parse_matrix(value);
      } else if (key == "K_x0") {
        c.K_x0 = parse_matrix(value);
      } else if (key == "k_tf") {
        c.k_tf = parse_number(value);
      } else if (key == "tf_guess") {
        c.tf_guess = parse_number(value);
      } else if (key == "rel_tol") {
        c.integrator.rel_tol = parse_number(value);
      } else if (key == "abs_tol") {
        c.integrator.abs_tol = parse_number(value);
      } else if (key == "tau_max") {
        c.integrator.tau_max = parse_number(value);
      } else if (key == "initial_step") {
        c.integrator.initial_step = parse_number(value);
      } else if (key == "max_step") {
        c.integrator.max_step = parse_number(value);
      } else if (key == "stepper") {
        if (value == "dopri5") {
          c.integrator.stepper = StepperKind::kDormandPrince45;
        } else if (value == "rk4") {
          c.integrator.stepper = StepperKind::kRk4;
        } else {
          throw std::invalid_argument("expected dopri5 or rk4");
        }
      } else if (key == "fixed_step") {
        c.integrator.fixed_step = parse_number(value);
      } else if (key == "snapshots") {
        c.integrator.snapshot_times = parse_list(value);
      } else if (key == "eps_feas") {
        c.integrator.eps_feas = parse_number(value);
      } else if (key == "eps_opt") {
        c.integrator.eps_opt = parse_number(value);
      } else if (key == "min_tf_gap") {
        c.integrator.min_tf_gap = parse_number(value);
      } else if (key == "stop_on_convergence") {
        c.integrator.stop_on_convergence = parse_bool(value);
      } else if (key == "transport") {
        c.moving_grid = parse_bool(value);
      } else if (key == "mode") {
        if (value == "arbitrary") {
          c.mode = StartMode::kArbitrary;
        } else if (value == "feasible-start") {
          c.mode = StartMode::kFeasibleStart;
        } else {
          throw std::invalid_argument("expected arbitrary or feasible-start");
        }
      } else if (key == "transition_substeps") {
        c.transition_substeps = static_cast<int>(parse_number(value));
      } else if (key == "state_scales") {
        c.state_scales = to_vector(parse_list(value));
      } else if (key == "control_scales") {
        c.control_scales = to_vector(parse_list(value));
      } else if (key == "time_scale") {
        c.time_scale = parse_number(value);
      } else if (key == "out") {
        c.out_dir = value;
      } else {
        throw std::invalid_argument("unknown key");
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config key '" + key + "': " + e.what());
    }
  }
}

RunConfig load_run_config(const std::string& path, ProblemKind fallback) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const auto values = parse_key_values(buf.str());
  ProblemKind kind = fallback;
  if (const auto it = values.find("problem"); it != values.end()) {
    const auto parsed = parse_problem_kind(it->second);
    if (!parsed) {
      throw std::invalid_argument("config key 'problem': unknown problem '" +
                                  it->second + "'");
    }
    kind = *parsed;
  }
  RunConfig config = RunConfig::defaults(kind);
  apply_key_values(config, values);
  return config;
}

EvolutionGains resolve_gains(const RunConfig& config, int state_dim,
                             int control_dim) {
  EvolutionGains g;
  g.K = expand(config.K, control_dim);
  g.K_f = expand(config.K_f, state_dim);
  g.K_x0 = expand(config.K_x0, state_dim);
  g.k_tf = config.k_tf;
  return g;
}

std::vector<std::string> validate(const RunConfig& c) {
  std::vector<std::string> v;
  if (c.N < 3) v.push_back("N >= 3 required (got N = " + std::to_string(c.N) + ")");
  if (!(c.tf_guess > 0.0)) v.push_back("tf_guess must be > 0");
  if (c.transition_substeps < 1) v.push_back("transition_substeps must be >= 1");
  for (const auto& s : integrator_violations(c.integrator)) v.push_back(s);

  const Dims d = dims_of(c.problem);
  if (c.problem == ProblemKind::kCovDemo) {
    if (c.K.rows() != 1 || c.K.cols() != 1 || !(c.K(0, 0) > 0.0)) {
      v.push_back("K must be a positive scalar for cov-demo");
    }
    return v;
  }

  OcpProblem problem = c.problem == ProblemKind::kExample1
                           ? example1_problem()
                           : example2_problem();
  const EvolutionGains gains = resolve_gains(c, d.n, d.m);
  for (const auto& s : gain_violations(gains, problem)) v.push_back(s);

  if (c.state_scales.size() || c.control_scales.size() || c.time_scale) {
    ScalingSpec spec = c.problem == ProblemKind::kExample2
                           ? example2_default_scaling()
                           : ScalingSpec::identity(d.n, d.m);
    if (c.state_scales.size()) spec.state_scales = c.state_scales;
    if (c.control_scales.size()) spec.control_scales = c.control_scales;
    if (c.time_scale) spec.time_scale = *c.time_scale;
    for (const auto& s : scaling_violations(spec, d.n, d.m)) v.push_back(s);
  }
  return v;
}

}  // namespace vem
