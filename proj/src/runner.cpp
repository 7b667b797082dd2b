#include "vem/runner.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "vem/oracles.hpp"
#include "vem/problems.hpp"

namespace vem {
namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_snapshot_header(std::ostream& out, int n, int m) {
  out << "tau,node,t";
  for (int k = 1; k <= n; ++k) out << ",x" << k;
  for (int k = 1; k <= m; ++k) out << ",u" << k;
  out << '\n';
}

void write_snapshot_rows(std::ostream& out, double tau, const Grid& grid,
                         const NodeMatrix& x, const NodeMatrix& u) {
  for (int i = 0; i < grid.N; ++i) {
    out << fmt(tau) << ',' << i << ',' << fmt(grid.time(i));
    for (Eigen::Index k = 0; k < x.cols(); ++k) out << ',' << fmt(x(i, k));
    for (Eigen::Index k = 0; k < u.cols(); ++k) out << ',' << fmt(u(i, k));
    out << '\n';
  }
}

constexpr const char* kDiagnosticsHeader =
    "tau,J,ef_norm,ex0_norm,pu_norm,transversality,tf,V\n";

ScalingSpec resolve_scaling(const RunConfig& c, int n, int m) {
  ScalingSpec spec = c.problem == ProblemKind::kExample2
                         ? example2_default_scaling()
                         : ScalingSpec::identity(n, m);
  if (c.state_scales.size()) spec.state_scales = c.state_scales;
  if (c.control_scales.size()) spec.control_scales = c.control_scales;
  if (c.time_scale) spec.time_scale = *c.time_scale;
  return spec;
}

int exit_code_for(Termination t) { return t == Termination::kError ? 2 : 0; }

RunOutcome run_cov(const RunConfig& config, std::ostream& log) {
  const CovProblem problem =
      dirichlet_energy_problem(Vector::Zero(1), Vector::Ones(1));
  const Grid grid = build_grid(config.N, problem.t0, problem.tf);
  const NodeMatrix guess = cov_quadratic_guess(problem, grid);

  const auto start = std::chrono::steady_clock::now();
  const CovRun cov =
      integrate_cov_flow(problem, guess, grid, config.K, config.integrator);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  const fs::path dir(config.out_dir);
  fs::create_directories(dir);
  {
    auto out = open_output(dir / "snapshots.csv");
    write_snapshot_header(out, 1, 0);
    const NodeMatrix none(grid.N, 0);
    for (const auto& [tau, y] : cov.snapshots) {
      write_snapshot_rows(out, tau, grid, y, none);
    }
  }
  {
    // Columns shared with the OCP runs; pu_norm holds the Euler-Lagrange
    // residual and V the functional itself.
    auto out = open_output(dir / "diagnostics.csv");
    out << kDiagnosticsHeader;
    for (const auto& r : cov.records) {
      out << fmt(r.tau) << ',' << fmt(r.J) << ",0,0," << fmt(r.residual_norm)
          << ",0," << fmt(grid.tf) << ',' << fmt(r.J) << '\n';
    }
  }
  double max_error = 0.0;
  for (int i = 0; i < grid.N; ++i) {
    max_error = std::max(max_error, std::abs(cov.final_y(i, 0) - grid.time(i)));
  }
  nlohmann::json s;
  s["problem"] = to_string(config.problem);
  s["nodes"] = grid.N;
  s["termination"] = to_string(cov.termination);
  s["message"] = cov.message;
  s["final"] = {{"tau", cov.records.back().tau},
                {"J", cov.records.back().J},
                {"residual_norm", cov.records.back().residual_norm}};
  s["max_node_error"] = max_error;
  s["steps"] = {{"accepted", cov.stats.accepted},
                {"rejected", cov.stats.rejected}};
  s["wall_time_s"] = wall;
  open_output(dir / "summary.json") << s.dump(2) << '\n';

  log << "cov-demo: " << to_string(cov.termination) << ", max node error "
      << fmt(max_error) << '\n';
  return {exit_code_for(cov.termination), cov.termination, cov.message};
}

}  // namespace

PreparedRun prepare_run(const RunConfig& config) {
  PreparedRun p;
  switch (config.problem) {
    case ProblemKind::kExample1: {
      LqSpec spec = example1_lq_spec();
      spec.tf = config.tf_guess;
      p.physical = make_lq_problem(spec, "example1");
      break;
    }
    case ProblemKind::kExample2: {
      HomingMissileParams hp;
      hp.tf_guess = config.tf_guess;
      p.physical = example2_problem(hp);
      break;
    }
    case ProblemKind::kCovDemo:
      throw std::invalid_argument("cov-demo is not an optimal control run");
  }
  const int n = p.physical.state_dim;
  const int m = p.physical.control_dim;
  p.scaling = resolve_scaling(config, n, m);
  p.scaled = apply_scaling(p.physical, p.scaling);
  p.gains = resolve_gains(config, n, m);
  p.options.transport = config.moving_grid ? TransportMode::kMovingGrid
                                           : TransportMode::kFrozenNodes;
  p.options.transition.substeps = config.transition_substeps;

  const Grid grid = build_grid(config.N, p.scaled.t0, p.scaled.tf);
  if (config.mode == StartMode::kFeasibleStart) {
    p.initial = feasible_initialize(p.scaled, NodeMatrix::Zero(grid.N, m),
                                    grid, config.transition_substeps);
    p.options.restore_feasibility = false;
  } else {
    p.initial = zero_field(p.scaled, grid);
  }
  return p;
}

CovRun integrate_cov_flow(const CovProblem& problem, const NodeMatrix& y0,
                          const Grid& grid, const Matrix& K,
                          const IntegratorConfig& config) {
  if (y0.rows() != grid.N || y0.cols() != problem.dim) {
    throw std::invalid_argument("cov flow: initial profile has wrong shape");
  }
  if (const auto v = integrator_violations(config); !v.empty()) {
    throw std::invalid_argument("integrator config: " + v.front());
  }
  const Matrix gain =
      K.size() == 1 ? Matrix(K(0, 0) * Matrix::Identity(problem.dim, problem.dim))
                    : K;
  const int N = grid.N;
  const int d = problem.dim;
  const Eigen::Index interior = Eigen::Index(N - 2) * d;

  NodeMatrix y = y0;
  auto load = [&](const Vector& state) {
    y.middleRows(1, N - 2) = Eigen::Map<const NodeMatrix>(state.data(), N - 2, d);
  };
  auto rhs = [&](double, const Vector& state) {
    load(state);
    const NodeMatrix r = cov_rhs(problem, y, grid, gain);
    NodeMatrix mid = r.middleRows(1, N - 2);
    return Vector(Eigen::Map<const Vector>(mid.data(), interior));
  };

  CovRun run;
  std::size_t next_snapshot = 0;
  auto observer = [&](double tau, const Vector& state) {
    load(state);
    const NodeMatrix res = euler_lagrange_residual(problem, y, grid);
    run.records.push_back({tau, cov_functional(problem, y, grid),
                           res.cwiseAbs().maxCoeff()});
    while (next_snapshot < config.snapshot_times.size() &&
           config.snapshot_times[next_snapshot] <= tau) {
      if (config.snapshot_times[next_snapshot] == tau) {
        run.snapshots.emplace_back(tau, y);
      }
      ++next_snapshot;
    }
    return config.stop_on_convergence &&
           run.records.back().residual_norm <= config.eps_opt;
  };

  OdeSettings settings;
  settings.rel_tol = config.rel_tol;
  settings.abs_tol = config.abs_tol;
  settings.initial_step = config.initial_step;
  settings.max_step = config.max_step;
  settings.max_steps = config.max_steps;
  settings.stepper = config.stepper;
  settings.fixed_step = config.fixed_step;
  settings.stop_points = config.snapshot_times;

  NodeMatrix start = y0.middleRows(1, N - 2);
  Vector state = Eigen::Map<const Vector>(start.data(), interior);
  const OdeOutcome out =
      integrate_ode(rhs, state, 0.0, config.tau_max, settings, observer);
  run.stats = {out.accepted, out.rejected, out.rhs_evaluations};
  load(state);
  run.final_y = y;
  switch (out.status) {
    case OdeStatus::kReachedEnd:
      run.termination = Termination::kTauMax;
      break;
    case OdeStatus::kStoppedByObserver:
      run.termination = Termination::kConverged;
      break;
    default:
      run.termination = Termination::kError;
      run.message = "integration failed at tau = " + std::to_string(out.t);
  }
  return run;
}

RunOutcome run(const RunConfig& config, std::ostream& log) {
  if (const auto v = validate(config); !v.empty()) {
    throw std::invalid_argument(v.front());
  }
  if (config.problem == ProblemKind::kCovDemo) return run_cov(config, log);

  const PreparedRun prep = prepare_run(config);
  const auto start = std::chrono::steady_clock::now();
  const EvolutionRun ev = integrate_tau(prep.scaled, prep.initial, prep.gains,
                                        config.integrator, {}, prep.options);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  const double T = prep.scaling.time_scale;

  const fs::path dir(config.out_dir);
  fs::create_directories(dir);
  {
    auto out = open_output(dir / "snapshots.csv");
    write_snapshot_header(out, prep.physical.state_dim,
                          prep.physical.control_dim);
    for (const auto& [tau, field] : ev.snapshots) {
      const GridField phys = unscale_field(field, prep.scaling);
      write_snapshot_rows(out, tau, phys.grid, phys.x, phys.u);
    }
  }
  {
    auto out = open_output(dir / "diagnostics.csv");
    out << kDiagnosticsHeader;
    for (const auto& r : ev.records) {
      out << fmt(r.tau) << ',' << fmt(r.J) << ',' << fmt(r.ef_norm) << ','
          << fmt(r.ex0_norm) << ',' << fmt(r.pu_norm) << ','
          << fmt(r.transversality) << ',' << fmt(T * r.tf) << ',' << fmt(r.V)
          << '\n';
    }
  }

  nlohmann::json s;
  s["problem"] = to_string(config.problem);
  s["packed_states"] = ev.packed_size;
  s["nodes"] = config.N;
  s["transport"] = config.moving_grid ? "on" : "off";
  s["mode"] = config.mode == StartMode::kArbitrary ? "arbitrary"
                                                   : "feasible-start";
  s["termination"] = to_string(ev.termination);
  s["message"] = ev.message;
  if (!ev.records.empty()) {
    const auto& r = ev.records.back();
    s["final"] = {{"tau", r.tau},
                  {"J", r.J},
                  {"ef_norm", r.ef_norm},
                  {"ex0_norm", r.ex0_norm},
                  {"pu_norm", r.pu_norm},
                  {"transversality", r.transversality},
                  {"V", r.V}};
    s["tf"] = T * r.tf;
  }
  s["constants"] = {{"c1", ev.constants.c1},
                    {"c2", ev.constants.c2},
                    {"d1", ev.constants.d1},
                    {"d2", ev.constants.d2}};
  s["steps"] = {{"accepted", ev.stats.accepted},
                {"rejected", ev.stats.rejected},
                {"rhs_evaluations", ev.stats.rhs_evaluations}};

  if (config.problem == ProblemKind::kExample1) {
    LqSpec spec = example1_lq_spec();
    spec.tf = config.tf_guess;
    const GridField final_phys = unscale_field(ev.final_field, prep.scaling);
    const RiccatiSolution opt = riccati_oracle(spec, final_phys.grid);
    auto out = open_output(dir / "oracle.csv");
    write_snapshot_header(out, spec.A.rows(), spec.B.cols());
    write_snapshot_rows(out, ev.final_tau, final_phys.grid, opt.x, opt.u);
    s["oracle"] = {
        {"J_star", opt.J},
        {"max_abs_x_error", (final_phys.x - opt.x).cwiseAbs().maxCoeff()},
        {"max_abs_u_error", (final_phys.u - opt.u).cwiseAbs().maxCoeff()}};
  }
  s["wall_time_s"] = wall;
  open_output(dir / "summary.json") << s.dump(2) << '\n';

  log << to_string(config.problem) << ": " << to_string(ev.termination)
      << " at tau = " << fmt(ev.final_tau);
  if (!ev.message.empty()) log << " (" << ev.message << ")";
  log << ", " << ev.stats.accepted << " steps\n";
  return {exit_code_for(ev.termination), ev.termination, ev.message};
}

}  // namespace vem
