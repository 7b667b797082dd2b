#include "vem/evolution.hpp"

#include <cmath>
#include <sstream>

namespace vem {
namespace {

bool symmetric_positive_definite(const Matrix& m) {
  if (m.rows() != m.cols() || m.size() == 0 || !m.allFinite()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
  const Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success;
}

void require_finite_row(const Vector& v, const char* what, int node) {
  if (!v.allFinite()) throw NonFiniteEvaluation(what, node);
}

}  // namespace

EvolutionGains EvolutionGains::isotropic(int n, int m, double k, double k_f,
                                         double k_x0, double k_tf) {
  return {k * Matrix::Identity(m, m), k_f * Matrix::Identity(n, n),
          k_x0 * Matrix::Identity(n, n), k_tf};
}

std::vector<std::string> gain_violations(const EvolutionGains& g,
                                         const OcpProblem& p) {
  std::vector<std::string> out;
  auto check = [&](const Matrix& m, int dim, const char* name) {
    if (m.rows() != dim || m.cols() != dim) {
      std::ostringstream msg;
      msg << name << " must be " << dim << "x" << dim;
      out.push_back(msg.str());
    } else if (!symmetric_positive_definite(m)) {
      out.push_back(std::string(name) +
                    " must be symmetric positive-definite");
    }
  };
  check(g.K, p.control_dim, "K");
  check(g.K_f, p.state_dim, "K_f");
  check(g.K_x0, p.state_dim, "K_x0");
  if (!std::isfinite(g.k_tf) || g.k_tf < 0.0) {
    out.push_back("k_tf must be finite and >= 0");
  } else if (p.free_terminal_time() && !(g.k_tf > 0.0)) {
    out.push_back("k_tf must be > 0 for a free terminal time problem");
  }
  return out;
}

void validate_gains(const EvolutionGains& gains, const OcpProblem& problem) {
  const auto violations = gain_violations(gains, problem);
  if (!violations.empty()) throw std::invalid_argument(violations.front());
}

NodeMatrix dynamics_error(const OcpProblem& problem, const GridField& field) {
  check_field(problem, field);
  NodeMatrix e = time_derivative(field.x, field.grid);
  for (int i = 0; i < field.grid.N; ++i) {
    const Vector fi = problem.f(field.x.row(i).transpose(),
                                field.u.row(i).transpose(),
                                field.grid.time(i));
    require_finite_row(fi, "non-finite dynamics evaluation", i);
    e.row(i) -= fi.transpose();
  }
  return e;
}

Vector initial_error(const OcpProblem& problem, const GridField& field) {
  check_field(problem, field);
  return field.x.row(0).transpose() - problem.x0;
}

FieldTerms evaluate_field_terms(const OcpProblem& problem,
                                const GridField& field,
                                const TransitionTable& table) {
  check_field(problem, field);
  const int N = field.grid.N;
  const int n = problem.state_dim;
  const int m = problem.control_dim;
  if (table.nodes() != N) {
    throw std::invalid_argument("transition table does not match the grid");
  }

  FieldTerms terms;
  terms.xdot = time_derivative(field.x, field.grid);
  terms.dynamics_error = terms.xdot;
  terms.initial_error = field.x.row(0).transpose() - problem.x0;
  terms.phi_x.resize(N, n);
  terms.sources.resize(N, n);
  std::vector<Matrix> f_u(N);
  NodeMatrix l_u(N, m);

  for (int i = 0; i < N; ++i) {
    const Vector x = field.x.row(i).transpose();
    const Vector u = field.u.row(i).transpose();
    const Vector xdot = terms.xdot.row(i).transpose();
    const double t = field.grid.time(i);

    const Vector fi = problem.f(x, u, t);
    require_finite_row(fi, "non-finite dynamics evaluation", i);
    terms.dynamics_error.row(i) -= fi.transpose();

    const Vector phi_x = problem.phi_x(x, t);
    const Matrix f_x = problem.f_x(x, u, t);
    const Vector source = problem.L_x(x, u, t) + problem.phi_tx(x, t) +
                          problem.phi_xx(x, t).transpose() * xdot +
                          f_x.transpose() * phi_x;
    require_finite_row(source, "non-finite costate source", i);
    terms.phi_x.row(i) = phi_x.transpose();
    terms.sources.row(i) = source.transpose();
    f_u[i] = problem.f_u(x, u, t);
    l_u.row(i) = problem.L_u(x, u, t).transpose();
  }

  terms.tail = backward_transport(table, field.grid, terms.sources);
  terms.control_gradient.resize(N, m);
  for (int i = 0; i < N; ++i) {
    const Vector lambda = (terms.phi_x.row(i) + terms.tail.row(i)).transpose();
    terms.control_gradient.row(i) =
        l_u.row(i) + (f_u[i].transpose() * lambda).transpose();
    require_finite_row(terms.control_gradient.row(i).transpose(),
                       "non-finite control gradient", i);
  }
  return terms;
}

NodeMatrix control_gradient(const OcpProblem& problem, const GridField& field,
                            const TransitionTable& table) {
  return evaluate_field_terms(problem, field, table).control_gradient;
}

NodeMatrix pf_profile(const OcpProblem& problem, const GridField& field,
                      const TransitionTable& table) {
  const FieldTerms terms = evaluate_field_terms(problem, field, table);
  return terms.phi_x + terms.tail;
}

NodeMatrix px0_profile(const OcpProblem& problem, const GridField& field,
                       const TransitionTable& table) {
  const FieldTerms terms = evaluate_field_terms(problem, field, table);
  NodeMatrix out(field.grid.N, problem.state_dim);
  for (int i = 0; i < field.grid.N; ++i) {
    out.row(i) = (table.fundamental[i].transpose() *
                  terms.sources.row(i).transpose())
                     .transpose();
  }
  return out;
}

double transversality_residual(const OcpProblem& problem,
                               const GridField& field) {
  check_field(problem, field);
  const int last = field.grid.N - 1;
  const NodeMatrix xdot = time_derivative(field.x, field.grid);
  const Vector x = field.x.row(last).transpose();
  const Vector u = field.u.row(last).transpose();
  const double t = field.grid.tf;
  const double value = problem.L(x, u, t) + problem.phi_t(x, t) +
                       problem.phi_x(x, t).dot(xdot.row(last).transpose());
  if (!std::isfinite(value)) {
    throw NonFiniteEvaluation("non-finite transversality residual", last);
  }
  return value;
}

double ede_rhs(const OcpProblem& problem, const GridField& field,
               const EvolutionGains& gains) {
  if (!problem.free_terminal_time()) return 0.0;
  return -gains.k_tf * transversality_residual(problem, field);
}

RhsField epde_rhs(const OcpProblem& problem, const GridField& field,
                  const EvolutionGains& gains, const TransitionTable& table,
                  const EvolutionOptions& options) {
  const int N = field.grid.N;
  const int n = problem.state_dim;
  const FieldTerms terms = evaluate_field_terms(problem, field, table);

  RhsField rhs;
  // The x equation consumes du/dtau, so the control rates come first.
  rhs.du_dtau = -terms.control_gradient * gains.K.transpose();

  NodeMatrix sources(N, n);
  for (int i = 0; i < N; ++i) {
    const Matrix f_u = problem.f_u(field.x.row(i).transpose(),
                                   field.u.row(i).transpose(),
                                   field.grid.time(i));
    Vector s = f_u * rhs.du_dtau.row(i).transpose();
    if (options.restore_feasibility) {
      s -= gains.K_f * terms.dynamics_error.row(i).transpose();
    }
    sources.row(i) = s.transpose();
  }
  rhs.dx_dtau = forward_transport(table, field.grid, sources);
  if (options.restore_feasibility) {
    const Vector initial_rate = gains.K_x0 * terms.initial_error;
    for (int i = 0; i < N; ++i) {
      rhs.dx_dtau.row(i) -=
          (table.fundamental[i] * initial_rate).transpose();
    }
  }

  if (problem.free_terminal_time()) {
    const int last = N - 1;
    const Vector x = field.x.row(last).transpose();
    const Vector u = field.u.row(last).transpose();
    const double t = field.grid.tf;
    const double residual = problem.L(x, u, t) + problem.phi_t(x, t) +
                            terms.phi_x.row(last).dot(terms.xdot.row(last));
    if (!std::isfinite(residual)) {
      throw NonFiniteEvaluation("non-finite transversality residual", last);
    }
    rhs.dtf_dtau = -gains.k_tf * residual;
    if (options.transport == TransportMode::kMovingGrid) {
      const NodeMatrix udot = time_derivative(field.u, field.grid);
      for (int i = 0; i < N; ++i) {
        const double rate = field.grid.sigma(i) * rhs.dtf_dtau;
        rhs.dx_dtau.row(i) += rate * terms.xdot.row(i);
        rhs.du_dtau.row(i) += rate * udot.row(i);
      }
    }
  }
  for (int i = 0; i < N; ++i) {
    if (!rhs.dx_dtau.row(i).allFinite() || !rhs.du_dtau.row(i).allFinite()) {
      throw NonFiniteEvaluation("non-finite evolution rate", i);
    }
  }
  return rhs;
}

RhsField evolution_rhs(const OcpProblem& problem, const GridField& field,
                       const EvolutionGains& gains,
                       const EvolutionOptions& options) {
  const TransitionTable table =
      build_transition_table(problem, field, options.transition);
  return epde_rhs(problem, field, gains, table, options);
}

GridField feasible_initialize(const OcpProblem& problem,
                              const NodeMatrix& u_guess, const Grid& grid,
                              int substeps) {
  if (u_guess.rows() != grid.N || u_guess.cols() != problem.control_dim) {
    throw std::invalid_argument("control guess must be N x m");
  }
  if (!u_guess.allFinite()) {
    throw std::invalid_argument("control guess has non-finite entries");
  }
  GridField field{grid, NodeMatrix(grid.N, problem.state_dim), u_guess};
  Vector x = problem.x0;
  field.x.row(0) = x.transpose();
  auto rate = [&](const Vector& state, double t) {
    return Vector(problem.f(state, interpolate(u_guess, grid, t), t));
  };
  for (int i = 0; i + 1 < grid.N; ++i) {
    const double t_start = grid.time(i);
    const double h = (grid.time(i + 1) - t_start) / substeps;
    for (int s = 0; s < substeps; ++s) {
      const double t = t_start + s * h;
      const Vector k1 = rate(x, t);
      const Vector k2 = rate(x + 0.5 * h * k1, t + 0.5 * h);
      const Vector k3 = rate(x + 0.5 * h * k2, t + 0.5 * h);
      const Vector k4 = rate(x + h * k3, t + h);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!x.allFinite()) {
      throw std::runtime_error(
          "forward integration blew up before t = " +
          std::to_string(grid.time(i + 1)));
    }
    field.x.row(i + 1) = x.transpose();
  }
  return field;
}

}  // namespace vem
