#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "vem/discretization.hpp"
#include "vem/ocp_model.hpp"
#include "vem/transition.hpp"

namespace vem {

/// Gains of the evolution equations: K (m x m) scales the control descent,
/// K_f (n x n) and K_x0 (n x n) set the decay of the dynamics and initial
/// state errors, k_tf scales the terminal-time update.
struct EvolutionGains {
  Matrix K;
  Matrix K_f;
  Matrix K_x0;
  double k_tf = 0.0;

  static EvolutionGains isotropic(int state_dim, int control_dim, double k,
                                  double k_f, double k_x0, double k_tf);
};

/// One message per violated invariant; empty when the gains are usable.
std::vector<std::string> gain_violations(const EvolutionGains& gains,
                                         const OcpProblem& problem);
void validate_gains(const EvolutionGains& gains, const OcpProblem& problem);

/// How node values follow a moving terminal time. Nodes sit at fixed sigma,
/// so with kMovingGrid the chain-rule term (d/dt) * sigma_i * dtf/dtau is
/// added to the node rates; kFrozenNodes omits it.
enum class TransportMode { kMovingGrid, kFrozenNodes };

struct EvolutionOptions {
  TransportMode transport = TransportMode::kMovingGrid;
  TransitionOptions transition;
  // false drops the initial- and dynamics-error restoration terms, which is
  // the feasible-start form of the x equation.
  bool restore_feasibility = true;
};

/// d/dtau of the packed unknowns.
struct RhsField {
  NodeMatrix dx_dtau;  // N x n
  NodeMatrix du_dtau;  // N x m
  double dtf_dtau = 0.0;
};

class NonFiniteEvaluation : public std::runtime_error {
 public:
  NonFiniteEvaluation(const std::string& what, int node)
      : std::runtime_error(what + " at node " + std::to_string(node)),
        node_(node) {}
  int node() const { return node_; }

 private:
  int node_;
};

/// Quantities shared by the gradient, the sensitivity profiles and the RHS.
/// phi partials are evaluated along the trajectory at (x_i, t_i).
struct FieldTerms {
  NodeMatrix xdot;               // finite-difference dx/dt
  NodeMatrix dynamics_error;     // xdot - f
  Vector initial_error;          // x_0 - x0
  NodeMatrix phi_x;              // phi_x(x_i, t_i)
  NodeMatrix sources;            // L_x + phi_tx + phi_xx' xdot + f_x' phi_x
  NodeMatrix tail;               // int_{t_i}^{tf} Phi(s, t_i)' sources ds
  NodeMatrix control_gradient;   // L_u + f_u' (phi_x + tail)
};

FieldTerms evaluate_field_terms(const OcpProblem& problem,
                                const GridField& field,
                                const TransitionTable& table);

NodeMatrix dynamics_error(const OcpProblem& problem, const GridField& field);
Vector initial_error(const OcpProblem& problem, const GridField& field);

/// Costate-free control gradient at every node.
NodeMatrix control_gradient(const OcpProblem& problem, const GridField& field,
                            const TransitionTable& table);

/// Sensitivity of J to dynamics errors: phi_x(t) + tail(t).
NodeMatrix pf_profile(const OcpProblem& problem, const GridField& field,
                      const TransitionTable& table);

/// Sensitivity of J to the initial state: Phi(t, t0)' sources(t).
NodeMatrix px0_profile(const OcpProblem& problem, const GridField& field,
                       const TransitionTable& table);

/// (L + phi_t + phi_x' dx/dt) at the terminal node.
double transversality_residual(const OcpProblem& problem,
                               const GridField& field);

/// Right-hand side of the evolution equations for x and u (and tf when the
/// terminal time is free).
RhsField epde_rhs(const OcpProblem& problem, const GridField& field,
                  const EvolutionGains& gains, const TransitionTable& table,
                  const EvolutionOptions& options = {});

/// dtf/dtau = -k_tf * transversality; zero for fixed-tf problems.
double ede_rhs(const OcpProblem& problem, const GridField& field,
               const EvolutionGains& gains);

/// Builds the transition table and evaluates epde_rhs.
RhsField evolution_rhs(const OcpProblem& problem, const GridField& field,
                       const EvolutionGains& gains,
                       const EvolutionOptions& options = {});

/// Field whose states come from RK4 forward integration of the dynamics
/// from x0 under the linearly interpolated control guess (`substeps` steps
/// per interval). The initial error is exactly zero.
GridField feasible_initialize(const OcpProblem& problem,
                              const NodeMatrix& u_guess, const Grid& grid,
                              int substeps = 4);

}  // namespace vem
