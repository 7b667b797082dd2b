#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "vem/ocp_model.hpp"
#include "vem/types.hpp"

namespace vem {

/// Uniform grid on [t0, tf] with normalized nodes sigma_i = i / (N - 1).
/// Node times are t0 + sigma_i (tf - t0); the end nodes hit t0 and tf
/// exactly.
template <typename Scalar>
struct BasicGrid {
  int N = 0;
  Scalar t0 = 0;
  Scalar tf = 1;

  int intervals() const { return N - 1; }
  Scalar horizon() const { return tf - t0; }
  Scalar spacing() const { return (tf - t0) / Scalar(N - 1); }
  Scalar sigma(int i) const {
    return i == N - 1 ? Scalar(1) : Scalar(i) / Scalar(N - 1);
  }
  Scalar time(int i) const {
    if (i == 0) return t0;
    if (i == N - 1) return tf;
    return t0 + sigma(i) * (tf - t0);
  }
  VectorX<Scalar> times() const {
    VectorX<Scalar> t(N);
    for (int i = 0; i < N; ++i) t(i) = time(i);
    return t;
  }
  /// Same sigma nodes over a new horizon end.
  BasicGrid with_tf(Scalar new_tf) const { return {N, t0, new_tf}; }
};

using Grid = BasicGrid<double>;

template <typename Scalar>
BasicGrid<Scalar> build_grid(int N, Scalar t0, Scalar tf) {
  if (N < 3) throw std::invalid_argument("grid needs N >= 3 nodes");
  if (!(tf > t0)) throw std::invalid_argument("grid needs tf > t0");
  return {N, t0, tf};
}

/// Node values of the evolving unknowns at one variation time. The grid's
/// tf is the current terminal time.
struct GridField {
  Grid grid;
  NodeMatrix x;  // N x n
  NodeMatrix u;  // N x m

  double tf() const { return grid.tf; }
  int nodes() const { return grid.N; }
};

/// d/dt of node values (N x k): second-order central differences inside,
/// three-point one-sided stencils at both ends. Exact on quadratics.
template <typename Derived>
NodeMatrixX<typename Derived::Scalar> time_derivative(
    const Eigen::MatrixBase<Derived>& values,
    const BasicGrid<typename Derived::Scalar>& grid) {
  using Scalar = typename Derived::Scalar;
  const int N = grid.N;
  if (values.rows() != N) {
    throw std::invalid_argument("time_derivative: row count must equal N");
  }
  if (!values.allFinite()) {
    throw std::invalid_argument("time_derivative: non-finite input");
  }
  const Scalar inv2h = Scalar(1) / (Scalar(2) * grid.spacing());
  NodeMatrixX<Scalar> d(N, values.cols());
  d.row(0) = (Scalar(-3) * values.row(0) + Scalar(4) * values.row(1) -
              values.row(2)) *
             inv2h;
  for (int i = 1; i < N - 1; ++i) {
    d.row(i) = (values.row(i + 1) - values.row(i - 1)) * inv2h;
  }
  d.row(N - 1) = (Scalar(3) * values.row(N - 1) -
                  Scalar(4) * values.row(N - 2) + values.row(N - 3)) *
                 inv2h;
  return d;
}

/// Composite trapezoid of node values over [t_from, t_to].
template <typename Derived>
typename Derived::Scalar quadrature(
    const Eigen::MatrixBase<Derived>& values,
    const BasicGrid<typename Derived::Scalar>& grid, int from, int to) {
  using Scalar = typename Derived::Scalar;
  if (values.size() != grid.N) {
    throw std::invalid_argument("quadrature: expected N values");
  }
  if (from < 0 || to > grid.N - 1 || from > to) {
    throw std::out_of_range("quadrature: index range [" +
                            std::to_string(from) + ", " + std::to_string(to) +
                            "] invalid");
  }
  if (from == to) return Scalar(0);
  Scalar sum = Scalar(0.5) * (values(from) + values(to));
  for (int i = from + 1; i < to; ++i) sum += values(i);
  return sum * grid.spacing();
}

/// Row i holds the trapezoid integral of each column from t_0 to t_i; the
/// integral over [t_i, t_j] is row j minus row i.
template <typename Derived>
NodeMatrixX<typename Derived::Scalar> cumulative_trapezoid(
    const Eigen::MatrixBase<Derived>& values,
    const BasicGrid<typename Derived::Scalar>& grid) {
  using Scalar = typename Derived::Scalar;
  const Scalar half_h = Scalar(0.5) * grid.spacing();
  NodeMatrixX<Scalar> c(values.rows(), values.cols());
  c.row(0).setZero();
  for (Eigen::Index i = 1; i < values.rows(); ++i) {
    c.row(i) = c.row(i - 1) + half_h * (values.row(i - 1) + values.row(i));
  }
  return c;
}

/// cumulative_trapezoid with the Euler-Maclaurin endpoint term
/// -h^2/12 (y'(t_i) - y'(t_0)), slopes from time_derivative. Fourth order
/// on smooth data; differences of rows keep that order for any sub-range.
template <typename Derived>
NodeMatrixX<typename Derived::Scalar> cumulative_corrected(
    const Eigen::MatrixBase<Derived>& values,
    const BasicGrid<typename Derived::Scalar>& grid) {
  using Scalar = typename Derived::Scalar;
  const NodeMatrixX<Scalar> slope = time_derivative(values, grid);
  const Scalar c = grid.spacing() * grid.spacing() / Scalar(12);
  NodeMatrixX<Scalar> out = cumulative_trapezoid(values, grid);
  for (Eigen::Index i = 1; i < values.rows(); ++i) {
    out.row(i) -= c * (slope.row(i) - slope.row(0));
  }
  return out;
}

/// Piecewise-linear interpolation of node values at physical time t,
/// clamped to the grid.
template <typename Derived>
VectorX<typename Derived::Scalar> interpolate(
    const Eigen::MatrixBase<Derived>& values,
    const BasicGrid<typename Derived::Scalar>& grid,
    typename Derived::Scalar t) {
  using Scalar = typename Derived::Scalar;
  const Scalar s = std::clamp((t - grid.t0) / grid.horizon() *
                                  Scalar(grid.N - 1),
                              Scalar(0), Scalar(grid.N - 1));
  const int i = std::min(static_cast<int>(std::floor(s)), grid.N - 2);
  const Scalar w = s - Scalar(i);
  return ((Scalar(1) - w) * values.row(i) + w * values.row(i + 1)).transpose();
}

/// Zero field with the problem's dimensions on the given grid.
GridField zero_field(const OcpProblem& problem, const Grid& grid);

/// Throws std::invalid_argument unless the field matches the problem's
/// dimensions and is finite.
void check_field(const OcpProblem& problem, const GridField& field);

/// Physical -> scaled variables and back. The round trip is the identity up
/// to one rounding per multiply.
GridField scale_field(const GridField& field, const ScalingSpec& spec);
GridField unscale_field(const GridField& field, const ScalingSpec& spec);

}  // namespace vem
