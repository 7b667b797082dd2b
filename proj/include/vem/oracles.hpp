#pragma once

#include <vector>

#include "vem/discretization.hpp"
#include "vem/ocp_model.hpp"
#include "vem/problems.hpp"

namespace vem {

/// Finite-horizon LQR solution sampled at the grid nodes.
struct RiccatiSolution {
  NodeMatrix x;            // optimal states
  NodeMatrix u;            // optimal controls
  std::vector<Matrix> S;   // Riccati matrix at each node
  double J = 0.0;          // 1/2 x0' S(t0) x0
};

/// Backward RK4 sweep of dS/dt = -(A'S + SA - S B R^-1 B' S + Q),
/// S(tf) = F, then a forward RK4 sweep of the closed loop
/// dx/dt = (A - B R^-1 B' S) x. Both sweeps take `substeps` steps per grid
/// interval; the forward sweep reads S between steps through cubic Hermite
/// interpolation.
RiccatiSolution riccati_oracle(const LqSpec& spec, const Grid& grid,
                               int substeps = 10);

struct AdjointSolution {
  NodeMatrix lambda;             // costate at the nodes
  NodeMatrix control_gradient;   // L_u + f_u' lambda
  double dynamics_error = 0.0;   // max |dx/dt - f| of the input field
  bool feasibility_warning = false;
};

/// Costate of the field lambda = phi_x(x(t), t) + mu, where mu solves
///   dmu/dt = -f_x' mu - (L_x + phi_tx + phi_xx' dx/dt + f_x' phi_x),
///   mu(tf) = 0,
/// by backward RK4. x, u and the node slopes of x are read between nodes
/// through cubic Hermite interpolation. On a feasible field this is the
/// classical adjoint, and it does not use transition matrices. A warning is
/// attached if the field's dynamics error exceeds `feasibility_tolerance`.
AdjointSolution adjoint_oracle(const OcpProblem& problem,
                               const GridField& field, int substeps = 10,
                               double feasibility_tolerance = 1e-2);

}  // namespace vem
