#include "vem/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

namespace vem {
namespace {

struct EigenBounds {
  double min = 0.0;
  double max = 0.0;
};

EigenBounds symmetric_eigen_bounds(const Matrix& m, const char* name) {
  const Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 *
                                                     (m + m.transpose()));
  if (solver.info() != Eigen::Success) {
    throw std::invalid_argument(std::string("eigen-decomposition of ") +
                                name + " failed");
  }
  const EigenBounds b{solver.eigenvalues().minCoeff(),
                      solver.eigenvalues().maxCoeff()};
  if (!(b.min > 0.0)) {
    throw std::invalid_argument(std::string(name) +
                                " has a non-positive eigenvalue");
  }
  return b;
}

Vector row_norms(const NodeMatrix& m) { return m.rowwise().norm(); }

}  // namespace

double performance_index(const OcpProblem& problem, const GridField& field) {
  check_field(problem, field);
  const int N = field.grid.N;
  Vector running(N);
  for (int i = 0; i < N; ++i) {
    running(i) = problem.L(field.x.row(i).transpose(),
                           field.u.row(i).transpose(), field.grid.time(i));
  }
  const double value =
      problem.phi(field.x.row(N - 1).transpose(), field.grid.tf) +
      quadrature(running, field.grid, 0, N - 1);
  if (!std::isfinite(value)) {
    throw std::runtime_error("non-finite performance index");
  }
  return value;
}

OptimalityResiduals optimality_residuals(const OcpProblem& problem,
                                         const GridField& field,
                                         const TransitionTable& table) {
  const NodeMatrix pu = control_gradient(problem, field, table);
  return {pu.cwiseAbs().maxCoeff(), transversality_residual(problem, field)};
}

BoundEstimate estimate_bounds(const OcpProblem& problem,
                              const GridField& field,
                              const TransitionTable& table,
                              const DiagnosticsConfig& config) {
  const NodeMatrix pf = pf_profile(problem, field, table);
  const NodeMatrix px0 = px0_profile(problem, field, table);
  return {config.bound_inflation * row_norms(pf).maxCoeff(),
          config.bound_inflation * row_norms(px0).maxCoeff()};
}

LyapunovConstants select_lyapunov_constants(const EvolutionGains& gains,
                                            double horizon, double d1,
                                            double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) {
    throw std::invalid_argument("Lyapunov bounds d1, d2 must be positive");
  }
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("Lyapunov horizon must be positive");
  }
  const EigenBounds kf = symmetric_eigen_bounds(gains.K_f, "K_f");
  const EigenBounds kx0 = symmetric_eigen_bounds(gains.K_x0, "K_x0");

  LyapunovConstants c;
  c.d1 = d1;
  c.d2 = d2;
  c.horizon = horizon;
  c.kf_min_eig = kf.min;
  c.kf_max_eig = kf.max;
  c.kx0_min_eig = kx0.min;
  c.kx0_max_eig = kx0.max;
  const double initial_branch = kx0.min / (d2 * kx0.max * horizon * horizon);
  const double dynamics_branch = kf.min / (d1 * kf.max * horizon);
  c.c1 = 0.5 * std::min(initial_branch, dynamics_branch);
  c.c2 = gains.k_tf > 0.0 ? 2.0 * gains.k_tf / (2.0 * c.c1 * kf.min) : 1.0;
  return c;
}

DiagnosticsRecord evaluate_diagnostics(const OcpProblem& problem,
                                       const GridField& field,
                                       const TransitionTable& table,
                                       double tau) {
  const FieldTerms terms = evaluate_field_terms(problem, field, table);
  const int N = field.grid.N;

  DiagnosticsRecord r;
  r.tau = tau;
  r.J = performance_index(problem, field);
  r.ef_norm = terms.dynamics_error.cwiseAbs().maxCoeff();
  r.ex0_norm = terms.initial_error.cwiseAbs().maxCoeff();
  r.pu_norm = terms.control_gradient.cwiseAbs().maxCoeff();
  {
    const int last = N - 1;
    const Vector x = field.x.row(last).transpose();
    const Vector u = field.u.row(last).transpose();
    r.transversality = problem.L(x, u, field.grid.tf) +
                       problem.phi_t(x, field.grid.tf) +
                       terms.phi_x.row(last).dot(terms.xdot.row(last));
  }
  r.tf = field.grid.tf;

  const Vector ef_norms = row_norms(terms.dynamics_error);
  r.ex0_two_norm = terms.initial_error.norm();
  r.ef_integral = quadrature(ef_norms, field.grid, 0, N - 1);
  r.ef_terminal_sq = ef_norms(N - 1) * ef_norms(N - 1);
  r.pf_max = row_norms(terms.phi_x + terms.tail).maxCoeff();
  double px0 = 0.0;
  for (int i = 0; i < N; ++i) {
    px0 = std::max(px0, (table.fundamental[i].transpose() *
                         terms.sources.row(i).transpose())
                            .norm());
  }
  r.px0_max = px0;
  return r;
}

double lyapunov_value(const DiagnosticsRecord& r,
                      const LyapunovConstants& c) {
  return r.ex0_two_norm + r.ef_integral + c.c1 * r.J +
         0.5 * c.c2 * r.ef_terminal_sq;
}

double lyapunov_value(const OcpProblem& problem, const GridField& field,
                      const LyapunovConstants& constants) {
  const NodeMatrix ef = dynamics_error(problem, field);
  const Vector ef_norms = row_norms(ef);
  const int N = field.grid.N;
  return initial_error(problem, field).norm() +
         quadrature(ef_norms, field.grid, 0, N - 1) +
         constants.c1 * performance_index(problem, field) +
         0.5 * constants.c2 * ef_norms(N - 1) * ef_norms(N - 1);
}

LyapunovConstants constants_for_run(
    const std::vector<DiagnosticsRecord>& records, const EvolutionGains& gains,
    double t0, const DiagnosticsConfig& config) {
  if (records.empty()) {
    throw std::invalid_argument("no diagnostics records");
  }
  double pf = 0.0, px0 = 0.0, horizon = 0.0;
  for (const auto& r : records) {
    pf = std::max(pf, r.pf_max);
    px0 = std::max(px0, r.px0_max);
    horizon = std::max(horizon, r.tf - t0);
  }
  const double d1 = std::max(config.bound_inflation * pf, config.bound_floor);
  const double d2 = std::max(config.bound_inflation * px0, config.bound_floor);
  return select_lyapunov_constants(gains, horizon, d1, d2);
}

void assign_lyapunov(std::vector<DiagnosticsRecord>& records,
                     const LyapunovConstants& constants) {
  for (std::size_t k = 0; k < records.size(); ++k) {
    records[k].V = lyapunov_value(records[k], constants);
    records[k].dV_estimate =
        k == 0 ? 0.0
               : (records[k].V - records[k - 1].V) /
                     (records[k].tau - records[k - 1].tau);
  }
}

}  // namespace vem
