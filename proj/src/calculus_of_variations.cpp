#include "vem/calculus_of_variations.hpp"

#include <stdexcept>

#include "vem/evolution.hpp"

namespace vem {
namespace {

void check_shape(const CovProblem& problem, const NodeMatrix& y,
                 const Grid& grid) {
  if (y.rows() != grid.N || y.cols() != problem.dim) {
    throw std::invalid_argument("cov field must be N x dim");
  }
}

}  // namespace

CovProblem dirichlet_energy_problem(const Vector& y0, const Vector& yf,
                                    double t0, double tf) {
  if (y0.size() != yf.size() || y0.size() == 0) {
    throw std::invalid_argument("boundary values must share a dimension");
  }
  CovProblem p;
  p.dim = static_cast<int>(y0.size());
  p.t0 = t0;
  p.tf = tf;
  p.y0 = y0;
  p.yf = yf;
  p.F = [](const Vector&, const Vector& ydot, double) {
    return 0.5 * ydot.squaredNorm();
  };
  p.F_y = [](const Vector& y, const Vector&, double) {
    return Vector(Vector::Zero(y.size()));
  };
  p.F_ydot = [](const Vector&, const Vector& ydot, double) { return ydot; };
  return p;
}

double cov_functional(const CovProblem& problem, const NodeMatrix& y,
                      const Grid& grid) {
  check_shape(problem, y, grid);
  const double h = grid.spacing();
  double sum = 0.0;
  for (int i = 0; i + 1 < grid.N; ++i) {
    const Vector mid = 0.5 * (y.row(i) + y.row(i + 1)).transpose();
    const Vector slope = (y.row(i + 1) - y.row(i)).transpose() / h;
    sum += problem.F(mid, slope, 0.5 * (grid.time(i) + grid.time(i + 1)));
  }
  return h * sum;
}

NodeMatrix euler_lagrange_residual(const CovProblem& problem,
                                   const NodeMatrix& y, const Grid& grid) {
  check_shape(problem, y, grid);
  const int N = grid.N;
  const double h = grid.spacing();
  NodeMatrix f_y(N - 1, problem.dim);
  NodeMatrix f_ydot(N - 1, problem.dim);
  for (int i = 0; i + 1 < N; ++i) {
    const Vector mid = 0.5 * (y.row(i) + y.row(i + 1)).transpose();
    const Vector slope = (y.row(i + 1) - y.row(i)).transpose() / h;
    const double t = 0.5 * (grid.time(i) + grid.time(i + 1));
    f_y.row(i) = problem.F_y(mid, slope, t).transpose();
    f_ydot.row(i) = problem.F_ydot(mid, slope, t).transpose();
    if (!f_y.row(i).allFinite() || !f_ydot.row(i).allFinite()) {
      throw NonFiniteEvaluation("non-finite integrand partial", i);
    }
  }
  NodeMatrix residual = NodeMatrix::Zero(N, problem.dim);
  for (int i = 1; i + 1 < N; ++i) {
    residual.row(i) = 0.5 * (f_y.row(i - 1) + f_y.row(i)) -
                      (f_ydot.row(i) - f_ydot.row(i - 1)) / h;
  }
  return residual;
}

NodeMatrix cov_rhs(const CovProblem& problem, const NodeMatrix& y,
                   const Grid& grid, const Matrix& K) {
  if (K.rows() != problem.dim || K.cols() != problem.dim) {
    throw std::invalid_argument("cov gain must be dim x dim");
  }
  return -euler_lagrange_residual(problem, y, grid) * K.transpose();
}

NodeMatrix cov_quadratic_guess(const CovProblem& problem, const Grid& grid) {
  NodeMatrix y(grid.N, problem.dim);
  for (int i = 0; i < grid.N; ++i) {
    const double s = grid.sigma(i);
    y.row(i) = (problem.y0 + (problem.yf - problem.y0) * s * s).transpose();
  }
  return y;
}

}  // namespace vem
