#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vem/evolution.hpp"
#include "vem/solver.hpp"

namespace vem {

enum class ProblemKind { kExample1, kExample2, kCovDemo };
enum class StartMode { kArbitrary, kFeasibleStart };

std::optional<ProblemKind> parse_problem_kind(const std::string& name);
const char* to_string(ProblemKind kind);

/// Everything a run needs. Gains given as 1x1 matrices mean scalar times
/// identity. Scaling overrides left empty keep the problem's defaults.
struct RunConfig {
  ProblemKind problem = ProblemKind::kExample1;
  int N = 61;
  Matrix K;
  Matrix K_f;
  Matrix K_x0;
  double k_tf = 0.0;
  double tf_guess = 3.0;  // physical seconds; the fixed end for example1
  IntegratorConfig integrator;
  bool moving_grid = true;
  StartMode mode = StartMode::kArbitrary;
  int transition_substeps = 4;
  Vector state_scales;
  Vector control_scales;
  std::optional<double> time_scale;
  std::string out_dir = "out";

  /// Settings of the worked examples for each problem.
  static RunConfig defaults(ProblemKind kind);
};

/// Flat `key = value` text: '#' starts a comment, lists and row-major
/// matrices are bracketed, e.g. `K_f = [[0.1, 0], [0, 0.1]]`.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Scalar, `[a, b]` (one row) or `[[a, b], [c, d]]`.
Matrix parse_matrix(const std::string& value);
std::vector<double> parse_list(const std::string& value);

/// Applies parsed keys on top of `config`. Unknown keys and malformed
/// values throw std::invalid_argument naming the key.
void apply_key_values(RunConfig& config,
                      const std::map<std::string, std::string>& values);

/// Reads a config file: its `problem` key picks the defaults that the
/// remaining keys override. `fallback` is used when the key is absent.
RunConfig load_run_config(const std::string& path, ProblemKind fallback);

/// Gains with scalar entries expanded to the problem's dimensions.
EvolutionGains resolve_gains(const RunConfig& config, int state_dim,
                             int control_dim);

/// Every invariant violation; empty iff the config is runnable.
std::vector<std::string> validate(const RunConfig& config);

}  // namespace vem
