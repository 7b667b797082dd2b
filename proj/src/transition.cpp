#include "vem/transition.hpp"

#include <string>

namespace vem {
namespace {

// Integral of equally spaced samples (one per row, spacing h) by the
// endpoint-corrected trapezoid; plain trapezoid below three samples.
Vector corrected_sum(const NodeMatrix& samples, double h) {
  const Eigen::Index k = samples.rows();
  if (k < 2) return Vector::Zero(samples.cols());
  Vector sum = 0.5 * (samples.row(0) + samples.row(k - 1)).transpose();
  for (Eigen::Index j = 1; j < k - 1; ++j) sum += samples.row(j).transpose();
  sum *= h;
  if (k >= 3) {
    const Vector d0 = (-3.0 * samples.row(0) + 4.0 * samples.row(1) -
                       samples.row(2)).transpose() / (2.0 * h);
    const Vector d1 = (3.0 * samples.row(k - 1) - 4.0 * samples.row(k - 2) +
                       samples.row(k - 3)).transpose() / (2.0 * h);
    sum -= (h * h / 12.0) * (d1 - d0);
  }
  return sum;
}

// f_x along the piecewise-linear interpolant of the node values.
Matrix jacobian_at(const OcpProblem& problem, const GridField& field,
                   double t) {
  return problem.f_x(interpolate(field.x, field.grid, t),
                     interpolate(field.u, field.grid, t), t);
}

// One classical RK4 step of dPhi/dt = A(t) Phi.
Matrix rk4_step(const OcpProblem& problem, const GridField& field,
                const Matrix& phi, double t, double h) {
  const Matrix a0 = jacobian_at(problem, field, t);
  const Matrix a1 = jacobian_at(problem, field, t + 0.5 * h);
  const Matrix a2 = jacobian_at(problem, field, t + h);
  const Matrix k1 = a0 * phi;
  const Matrix k2 = a1 * (phi + 0.5 * h * k1);
  const Matrix k3 = a1 * (phi + 0.5 * h * k2);
  const Matrix k4 = a2 * (phi + h * k3);
  return phi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Matrix advance_interval(const OcpProblem& problem, const GridField& field,
                        const Matrix& phi, int interval, int substeps) {
  const double t_start = field.grid.time(interval);
  const double h = (field.grid.time(interval + 1) - t_start) / substeps;
  Matrix out = phi;
  for (int s = 0; s < substeps; ++s) {
    out = rk4_step(problem, field, out, t_start + s * h, h);
  }
  return out;
}

double one_norm(const Matrix& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

void build_pairwise(const OcpProblem& problem, const GridField& field,
                    int substeps, TransitionTable& table) {
  const int N = field.grid.N;
  const int n = problem.state_dim;
  table.pairwise.assign(static_cast<std::size_t>(N) * (N + 1) / 2, Matrix());
  for (int j = 0; j < N; ++j) {
    Matrix current = Matrix::Identity(n, n);
    table.pairwise[static_cast<std::size_t>(j) * (j + 1) / 2 + j] = current;
    for (int i = j + 1; i < N; ++i) {
      current = advance_interval(problem, field, current, i - 1, substeps);
      table.pairwise[static_cast<std::size_t>(i) * (i + 1) / 2 + j] = current;
    }
  }
}

}  // namespace

TransitionTable build_transition_table(const OcpProblem& problem,
                                       const GridField& field,
                                       const TransitionOptions& options) {
  check_field(problem, field);
  if (options.substeps < 1) {
    throw std::invalid_argument("transition substeps must be >= 1");
  }
  const int N = field.grid.N;
  const int n = problem.state_dim;
  TransitionTable table;
  table.fundamental.reserve(N);
  table.fundamental_inverse.reserve(N);
  table.fundamental.push_back(Matrix::Identity(n, n));
  table.fundamental_inverse.push_back(Matrix::Identity(n, n));
  table.condition_estimate = 1.0;

  for (int i = 1; i < N; ++i) {
    Matrix next = advance_interval(problem, field, table.fundamental.back(),
                                   i - 1, options.substeps);
    if (!next.allFinite()) {
      throw std::runtime_error("transition matrix became non-finite at node " +
                               std::to_string(i));
    }
    const Eigen::FullPivLU<Matrix> lu(next);
    if (!lu.isInvertible()) {
      throw std::runtime_error("singular fundamental matrix at node " +
                               std::to_string(i));
    }
    Matrix inverse = lu.inverse();
    table.condition_estimate = std::max(table.condition_estimate,
                                        one_norm(next) * one_norm(inverse));
    table.fundamental.push_back(std::move(next));
    table.fundamental_inverse.push_back(std::move(inverse));
  }

  table.flagged = table.condition_estimate > options.condition_limit;
  if (table.flagged || options.force_pairwise) {
    build_pairwise(problem, field, options.substeps, table);
  }
  return table;
}

Matrix phi(const TransitionTable& table, int i, int j) {
  const int N = table.nodes();
  if (i < 0 || j < 0 || i >= N || j >= N) {
    throw std::out_of_range("phi: node index out of range");
  }
  if (table.flagged) {
    throw FlaggedTransitionTable(
        "transition table is ill-conditioned (condition estimate " +
        std::to_string(table.condition_estimate) +
        "); use the pairwise integration path");
  }
  return table.fundamental[i] * table.fundamental_inverse[j];
}

Matrix integrate_transition(const OcpProblem& problem, const GridField& field,
                            int i, int j, int substeps) {
  check_field(problem, field);
  if (j < 0 || i >= field.grid.N || i < j) {
    throw std::out_of_range("integrate_transition requires 0 <= j <= i < N");
  }
  Matrix current = Matrix::Identity(problem.state_dim, problem.state_dim);
  for (int k = j; k < i; ++k) {
    current = advance_interval(problem, field, current, k, substeps);
  }
  return current;
}

NodeMatrix forward_transport(const TransitionTable& table, const Grid& grid,
                             const NodeMatrix& sources) {
  const int N = grid.N;
  const int n = static_cast<int>(sources.cols());
  NodeMatrix out(N, n);
  if (table.uses_pairwise()) {
    for (int i = 0; i < N; ++i) {
      NodeMatrix samples(i + 1, n);
      for (int j = 0; j <= i; ++j) {
        samples.row(j) =
            (table.pairwise_at(i, j) * sources.row(j).transpose()).transpose();
      }
      out.row(i) = corrected_sum(samples, grid.spacing()).transpose();
    }
    return out;
  }
  // Phi(t_i, s) = F_i F_s^-1, so the integral is F_i times a cumulative sum.
  NodeMatrix pulled(N, n);
  for (int j = 0; j < N; ++j) {
    pulled.row(j) =
        (table.fundamental_inverse[j] * sources.row(j).transpose()).transpose();
  }
  const NodeMatrix cumulative = cumulative_corrected(pulled, grid);
  for (int i = 0; i < N; ++i) {
    out.row(i) = (table.fundamental[i] * cumulative.row(i).transpose()).transpose();
  }
  return out;
}

NodeMatrix backward_transport(const TransitionTable& table, const Grid& grid,
                              const NodeMatrix& sources) {
  const int N = grid.N;
  const int n = static_cast<int>(sources.cols());
  NodeMatrix out(N, n);
  if (table.uses_pairwise()) {
    for (int i = 0; i < N; ++i) {
      NodeMatrix samples(N - i, n);
      for (int j = i; j < N; ++j) {
        samples.row(j - i) = (table.pairwise_at(j, i).transpose() *
                              sources.row(j).transpose())
                                 .transpose();
      }
      out.row(i) = corrected_sum(samples, grid.spacing()).transpose();
    }
    return out;
  }
  // Phi(s, t_i)' = F_i^-T F_s', so the integral is F_i^-T times a tail sum.
  NodeMatrix pushed(N, n);
  for (int j = 0; j < N; ++j) {
    pushed.row(j) =
        (table.fundamental[j].transpose() * sources.row(j).transpose()).transpose();
  }
  const NodeMatrix cumulative = cumulative_corrected(pushed, grid);
  for (int i = 0; i < N; ++i) {
    const Vector tail = (cumulative.row(N - 1) - cumulative.row(i)).transpose();
    out.row(i) = (table.fundamental_inverse[i].transpose() * tail).transpose();
  }
  return out;
}

}  // namespace vem
