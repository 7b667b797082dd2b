#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vem/diagnostics.hpp"
#include "vem/evolution.hpp"
#include "vem/ode.hpp"

namespace vem {

/// Flat layout of the evolving unknowns: x row-major by node, then u
/// row-major by node, then tf when the terminal time is free.
struct PackLayout {
  int N = 0;
  int n = 0;
  int m = 0;
  bool free_tf = false;
  double t0 = 0.0;
  double tf_fixed = 0.0;  // grid end used when tf is not packed

  Eigen::Index size() const {
    return Eigen::Index(N) * (n + m) + (free_tf ? 1 : 0);
  }
  static PackLayout of(const OcpProblem& problem, const GridField& field);
};

Vector pack(const GridField& field, const PackLayout& layout);
GridField unpack(const Vector& state, const PackLayout& layout);

struct IntegratorConfig {
  double rel_tol = 1e-3;
  double abs_tol = 1e-6;
  double tau_max = 300.0;
  double initial_step = 0.0;  // 0: automatic
  double max_step = 0.0;      // 0: tau_max / 10
  long max_steps = 2'000'000;
  StepperKind stepper = StepperKind::kDormandPrince45;
  double fixed_step = 0.1;
  std::vector<double> snapshot_times;
  double eps_feas = 1e-3;
  double eps_opt = 1e-3;
  double min_tf_gap = 0.0;  // <= 0: 1e-3 (tf guess - t0)
  bool stop_on_convergence = true;
};

std::vector<std::string> integrator_violations(const IntegratorConfig& config);

class TerminalTimeCollapse : public std::runtime_error {
 public:
  TerminalTimeCollapse(double tau, double tf)
      : std::runtime_error("terminal-time collapse at tau = " +
                           std::to_string(tau) + " (tf = " +
                           std::to_string(tf) + ")") {}
};

enum class Termination { kConverged, kTauMax, kError };
const char* to_string(Termination t);

struct SolverStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evaluations = 0;
};

struct EvolutionRun {
  std::vector<std::pair<double, GridField>> snapshots;
  std::vector<DiagnosticsRecord> records;
  Termination termination = Termination::kTauMax;
  std::string message;
  double final_tau = 0.0;
  GridField final_field;
  LyapunovConstants constants;
  Eigen::Index packed_size = 0;
  SolverStats stats;
};

/// True when every stop threshold of `config` holds for `record`.
bool meets_stop_criteria(const DiagnosticsRecord& record, bool free_tf,
                         const IntegratorConfig& config);

/// Advances the field in variation time from 0 to config.tau_max. A record
/// is kept at tau = 0 and after every accepted step; snapshots are taken
/// at the configured tau values, which the integrator lands on exactly.
/// Solver failures end the run with Termination::kError and a message; only
/// invalid arguments throw.
EvolutionRun integrate_tau(const OcpProblem& problem,
                           const GridField& initial_field,
                           const EvolutionGains& gains,
                           const IntegratorConfig& config,
                           const DiagnosticsConfig& diag_config = {},
                           const EvolutionOptions& options = {});

}  // namespace vem
