#pragma once

#include <vector>

#include "vem/discretization.hpp"
#include "vem/evolution.hpp"
#include "vem/ocp_model.hpp"
#include "vem/transition.hpp"

namespace vem {

/// Snapshot of convergence measures at one variation time. Norms are in the
/// problem's (possibly scaled) units.
struct DiagnosticsRecord {
  double tau = 0.0;
  double J = 0.0;
  double ef_norm = 0.0;          // max |e_f| over nodes and components
  double ex0_norm = 0.0;         // max |e_x0|
  double pu_norm = 0.0;          // max |control gradient|
  double transversality = 0.0;   // L + phi_t + phi_x' dx/dt at tf
  double tf = 0.0;
  double V = 0.0;                // filled once the constants are known
  double dV_estimate = 0.0;      // (V_k - V_{k-1}) / (tau_k - tau_{k-1})

  // Lyapunov ingredients, kept so V can be re-evaluated for any constants.
  double ex0_two_norm = 0.0;
  double ef_integral = 0.0;      // trapezoid of |e_f(t)|_2
  double ef_terminal_sq = 0.0;   // |e_f(tf)|_2^2
  double pf_max = 0.0;           // max_i |p_f(t_i)|_2
  double px0_max = 0.0;          // max_i |p_x0(t_i)|_2
};

struct LyapunovConstants {
  double d1 = 0.0;
  double d2 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double horizon = 0.0;
  double kf_min_eig = 0.0;
  double kf_max_eig = 0.0;
  double kx0_min_eig = 0.0;
  double kx0_max_eig = 0.0;
};

struct DiagnosticsConfig {
  double bound_inflation = 1.5;
  double bound_floor = 1e-6;
};

/// phi(x(tf), tf) + trapezoid of L over the grid.
double performance_index(const OcpProblem& problem, const GridField& field);

struct OptimalityResiduals {
  double pu_norm = 0.0;
  double transversality = 0.0;
};

OptimalityResiduals optimality_residuals(const OcpProblem& problem,
                                         const GridField& field,
                                         const TransitionTable& table);

struct BoundEstimate {
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Inflated maxima of |p_f|_2 and |p_x0|_2 over the nodes. May be zero;
/// floor them before selecting constants.
BoundEstimate estimate_bounds(const OcpProblem& problem,
                              const GridField& field,
                              const TransitionTable& table,
                              const DiagnosticsConfig& config = {});

/// c1 at half of its admissible upper bound, c2 at twice its lower bound
/// (c2 = 1 when k_tf = 0). Throws on non-positive bounds or gains.
LyapunovConstants select_lyapunov_constants(const EvolutionGains& gains,
                                            double horizon, double d1,
                                            double d2);

/// |e_x0|_2 + int |e_f|_2 dt + c1 J + c2/2 |e_f(tf)|_2^2.
double lyapunov_value(const OcpProblem& problem, const GridField& field,
                      const LyapunovConstants& constants);
double lyapunov_value(const DiagnosticsRecord& record,
                      const LyapunovConstants& constants);

/// Everything in a record except V and dV_estimate.
DiagnosticsRecord evaluate_diagnostics(const OcpProblem& problem,
                                       const GridField& field,
                                       const TransitionTable& table,
                                       double tau);

/// Constants valid along the whole record sequence: running maxima of the
/// bounds (inflated, floored) and the longest horizon seen.
LyapunovConstants constants_for_run(const std::vector<DiagnosticsRecord>& records,
                                    const EvolutionGains& gains, double t0,
                                    const DiagnosticsConfig& config = {});

/// Fills V and dV_estimate of every record.
void assign_lyapunov(std::vector<DiagnosticsRecord>& records,
                     const LyapunovConstants& constants);

}  // namespace vem
