#include "vem/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vem/evolution.hpp"

namespace vem {
namespace {

struct RiccatiRate {
  Matrix A, Q, BRinvBt;

  Matrix operator()(const Matrix& S) const {
    return -(A.transpose() * S + S * A - S * BRinvBt * S + Q);
  }
};

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Cubic Hermite through the nodes with finite-difference slopes; fourth
// order in h away from the ends, so the oracle's own interpolation error
// stays below the transport quadrature it is checked against.
Vector interpolate_cubic(const NodeMatrix& values, const NodeMatrix& slopes,
                         const Grid& grid, double t) {
  const double h = grid.spacing();
  const double s = std::clamp((t - grid.t0) / h, 0.0, double(grid.N - 1));
  const int i = std::min(static_cast<int>(std::floor(s)), grid.N - 2);
  const double w = s - i;
  const double w2 = w * w, w3 = w2 * w;
  return ((2 * w3 - 3 * w2 + 1) * values.row(i) +
          (w3 - 2 * w2 + w) * h * slopes.row(i) +
          (-2 * w3 + 3 * w2) * values.row(i + 1) +
          (w3 - w2) * h * slopes.row(i + 1))
      .transpose();
}

}  // namespace

RiccatiSolution riccati_oracle(const LqSpec& spec, const Grid& grid,
                               int substeps) {
  const int n = static_cast<int>(spec.A.rows());
  if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  const Eigen::FullPivLU<Matrix> r_lu(spec.R);
  if (spec.R.rows() != spec.R.cols() || !r_lu.isInvertible()) {
    throw std::invalid_argument("R is not invertible");
  }
  const Matrix R_inv = r_lu.inverse();
  const RiccatiRate rate{spec.A, spec.Q, spec.B * R_inv * spec.B.transpose()};

  const int N = grid.N;
  const int fine = (N - 1) * substeps;
  const double h = grid.spacing() / substeps;

  // S and dS/dt at every substep point, index 0 = t0.
  std::vector<Matrix> S(fine + 1), dS(fine + 1);
  S[fine] = spec.F;
  dS[fine] = rate(S[fine]);
  for (int k = fine; k > 0; --k) {
    const Matrix& s = S[k];
    const Matrix k1 = rate(s);
    const Matrix k2 = rate(s - 0.5 * h * k1);
    const Matrix k3 = rate(s - 0.5 * h * k2);
    const Matrix k4 = rate(s - h * k3);
    S[k - 1] = symmetrized(s - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    dS[k - 1] = rate(S[k - 1]);
  }

  auto S_mid = [&](int k) {
    // Cubic Hermite midpoint between substep points k and k+1.
    return Matrix(0.5 * (S[k] + S[k + 1]) + (h / 8.0) * (dS[k] - dS[k + 1]));
  };
  auto closed_loop = [&](const Matrix& s, const Vector& x) {
    return Vector(spec.A * x - rate.BRinvBt * s * x);
  };

  RiccatiSolution sol;
  sol.x.resize(N, n);
  sol.u.resize(N, spec.B.cols());
  sol.S.resize(N);
  Vector x = spec.x0;
  for (int k = 0; k <= fine; ++k) {
    if (k % substeps == 0) {
      const int node = k / substeps;
      sol.x.row(node) = x.transpose();
      sol.u.row(node) = (-R_inv * spec.B.transpose() * S[k] * x).transpose();
      sol.S[node] = S[k];
    }
    if (k == fine) break;
    const Matrix mid = S_mid(k);
    const Vector k1 = closed_loop(S[k], x);
    const Vector k2 = closed_loop(mid, x + 0.5 * h * k1);
    const Vector k3 = closed_loop(mid, x + 0.5 * h * k2);
    const Vector k4 = closed_loop(S[k + 1], x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  sol.J = 0.5 * spec.x0.dot(S[0] * spec.x0);
  return sol;
}

AdjointSolution adjoint_oracle(const OcpProblem& problem,
                               const GridField& field, int substeps,
                               double feasibility_tolerance) {
  check_field(problem, field);
  if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  const Grid& grid = field.grid;
  const int N = grid.N;

  AdjointSolution sol;
  sol.dynamics_error =
      dynamics_error(problem, field).cwiseAbs().maxCoeff();
  sol.feasibility_warning = sol.dynamics_error > feasibility_tolerance;

  // The source term needs dx/dt; like the transport route it takes the
  // finite-difference slope at the nodes.
  const NodeMatrix xdot = time_derivative(field.x, grid);
  const NodeMatrix x_slopes = xdot;
  const NodeMatrix u_slopes = time_derivative(field.u, grid);
  const NodeMatrix xdot_slopes = time_derivative(xdot, grid);
  auto rate = [&](double t, const Vector& mu) {
    const Vector x = interpolate_cubic(field.x, x_slopes, grid, t);
    const Vector u = interpolate_cubic(field.u, u_slopes, grid, t);
    const Vector xd = interpolate_cubic(xdot, xdot_slopes, grid, t);
    const Matrix fx = problem.f_x(x, u, t);
    const Vector source = problem.L_x(x, u, t) + problem.phi_tx(x, t) +
                          problem.phi_xx(x, t).transpose() * xd +
                          fx.transpose() * problem.phi_x(x, t);
    return Vector(-fx.transpose() * mu - source);
  };

  sol.lambda.resize(N, problem.state_dim);
  Vector mu = Vector::Zero(problem.state_dim);
  auto store = [&](int i) {
    sol.lambda.row(i) =
        (problem.phi_x(field.x.row(i).transpose(), grid.time(i)) + mu)
            .transpose();
  };
  store(N - 1);
  for (int i = N - 1; i > 0; --i) {
    const double t_end = grid.time(i);
    const double h = (t_end - grid.time(i - 1)) / substeps;
    for (int s = 0; s < substeps; ++s) {
      const double t = t_end - s * h;
      const Vector k1 = rate(t, mu);
      const Vector k2 = rate(t - 0.5 * h, mu - 0.5 * h * k1);
      const Vector k3 = rate(t - 0.5 * h, mu - 0.5 * h * k2);
      const Vector k4 = rate(t - h, mu - h * k3);
      mu -= (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    store(i - 1);
  }

  sol.control_gradient.resize(N, problem.control_dim);
  for (int i = 0; i < N; ++i) {
    const Vector x = field.x.row(i).transpose();
    const Vector u = field.u.row(i).transpose();
    const double t = grid.time(i);
    sol.control_gradient.row(i) =
        (problem.L_u(x, u, t) +
         problem.f_u(x, u, t).transpose() * sol.lambda.row(i).transpose())
            .transpose();
  }
  return sol;
}

}  // namespace vem
