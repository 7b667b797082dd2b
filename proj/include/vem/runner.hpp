#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "vem/calculus_of_variations.hpp"
#include "vem/run_config.hpp"
#include "vem/solver.hpp"

namespace vem {

/// Problem, gains and starting field of an OCP run, in solver variables.
struct PreparedRun {
  OcpProblem physical;
  OcpProblem scaled;
  ScalingSpec scaling;
  EvolutionGains gains;
  GridField initial;  // scaled
  EvolutionOptions options;
};

/// Throws std::invalid_argument for cov-demo configs.
PreparedRun prepare_run(const RunConfig& config);

struct CovRecord {
  double tau = 0.0;
  double J = 0.0;
  double residual_norm = 0.0;  // max |Euler-Lagrange residual|
};

struct CovRun {
  std::vector<std::pair<double, NodeMatrix>> snapshots;
  std::vector<CovRecord> records;
  NodeMatrix final_y;
  Termination termination = Termination::kTauMax;
  std::string message;
  SolverStats stats;
};

/// Gradient flow dy/dtau = -K * residual of the interior nodes; the end
/// nodes stay on the boundary values.
CovRun integrate_cov_flow(const CovProblem& problem, const NodeMatrix& y0,
                          const Grid& grid, const Matrix& K,
                          const IntegratorConfig& config);

struct RunOutcome {
  int exit_code = 0;
  Termination termination = Termination::kTauMax;
  std::string message;
};

/// Runs the configured problem and writes snapshots.csv, diagnostics.csv,
/// summary.json (and oracle.csv for example1) into config.out_dir.
/// Progress lines go to `log`.
RunOutcome run(const RunConfig& config, std::ostream& log);

}  // namespace vem
