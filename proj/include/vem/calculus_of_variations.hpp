#pragma once

#include <functional>

#include "vem/discretization.hpp"

namespace vem {

/// J = int_{t0}^{tf} F(y, dy/dt, t) dt with y(t0) = y0 and y(tf) = yf.
struct CovProblem {
  using Integrand = std::function<double(const Vector&, const Vector&, double)>;
  using Partial = std::function<Vector(const Vector&, const Vector&, double)>;

  int dim = 1;
  double t0 = 0.0;
  double tf = 1.0;
  Vector y0;
  Vector yf;
  Integrand F;
  Partial F_y;
  Partial F_ydot;
};

/// F = 1/2 |dy/dt|^2 on [t0, tf]; its minimizer is the straight line.
CovProblem dirichlet_energy_problem(const Vector& y0, const Vector& yf,
                                    double t0 = 0.0, double tf = 1.0);

/// Discrete functional: midpoint rule on each interval with
/// y = (y_i + y_{i+1}) / 2 and dy/dt = (y_{i+1} - y_i) / h.
double cov_functional(const CovProblem& problem, const NodeMatrix& y,
                      const Grid& grid);

/// Euler-Lagrange residual F_y - d/dt F_ydot at interior nodes, with F_ydot
/// taken at interval midpoints and differenced across each node. Rows 0 and
/// N-1 are zero. The residual equals (1/h) dJ_h/dy_i for the discrete
/// functional above.
NodeMatrix euler_lagrange_residual(const CovProblem& problem,
                                   const NodeMatrix& y, const Grid& grid);

/// dy/dtau = -K (F_y - d/dt F_ydot) inside, zero at the pinned ends.
NodeMatrix cov_rhs(const CovProblem& problem, const NodeMatrix& y,
                   const Grid& grid, const Matrix& K);

/// y(t) = y0 + (yf - y0) s^2 with s = (t - t0) / (tf - t0): satisfies the
/// boundary conditions but not the Euler-Lagrange equation.
NodeMatrix cov_quadratic_guess(const CovProblem& problem, const Grid& grid);

}  // namespace vem
