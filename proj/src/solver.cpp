#include "vem/solver.hpp"

#include <algorithm>
#include <cmath>

namespace vem {

PackLayout PackLayout::of(const OcpProblem& problem, const GridField& field) {
  PackLayout layout;
  layout.N = field.grid.N;
  layout.n = problem.state_dim;
  layout.m = problem.control_dim;
  layout.free_tf = problem.free_terminal_time();
  layout.t0 = field.grid.t0;
  layout.tf_fixed = field.grid.tf;
  return layout;
}

Vector pack(const GridField& field, const PackLayout& layout) {
  if (field.x.rows() != layout.N || field.x.cols() != layout.n ||
      field.u.rows() != layout.N || field.u.cols() != layout.m) {
    throw std::invalid_argument("pack: field does not match the layout");
  }
  Vector state(layout.size());
  const Eigen::Index nx = Eigen::Index(layout.N) * layout.n;
  const Eigen::Index nu = Eigen::Index(layout.N) * layout.m;
  // NodeMatrix is row-major, so its storage is already node by node.
  state.head(nx) = Eigen::Map<const Vector>(field.x.data(), nx);
  state.segment(nx, nu) = Eigen::Map<const Vector>(field.u.data(), nu);
  if (layout.free_tf) state(nx + nu) = field.grid.tf;
  return state;
}

GridField unpack(const Vector& state, const PackLayout& layout) {
  if (state.size() != layout.size()) {
    throw std::invalid_argument(
        "unpack: state has length " + std::to_string(state.size()) +
        ", layout expects " + std::to_string(layout.size()));
  }
  const Eigen::Index nx = Eigen::Index(layout.N) * layout.n;
  const Eigen::Index nu = Eigen::Index(layout.N) * layout.m;
  GridField field;
  field.grid = {layout.N, layout.t0,
                layout.free_tf ? state(nx + nu) : layout.tf_fixed};
  field.x = Eigen::Map<const NodeMatrix>(state.data(), layout.N, layout.n);
  field.u = Eigen::Map<const NodeMatrix>(state.data() + nx, layout.N, layout.m);
  return field;
}

std::vector<std::string> integrator_violations(const IntegratorConfig& c) {
  std::vector<std::string> v;
  if (!(c.rel_tol > 0.0)) v.push_back("rel_tol must be > 0");
  if (!(c.abs_tol > 0.0)) v.push_back("abs_tol must be > 0");
  if (!(c.tau_max > 0.0)) v.push_back("tau_max must be > 0");
  if (c.initial_step < 0.0) v.push_back("initial_step must be >= 0");
  if (c.max_step < 0.0) v.push_back("max_step must be >= 0");
  if (c.stepper == StepperKind::kRk4 && !(c.fixed_step > 0.0)) {
    v.push_back("fixed_step must be > 0");
  }
  if (!(c.eps_feas > 0.0) || !(c.eps_opt > 0.0)) {
    v.push_back("stop thresholds must be > 0");
  }
  if (!std::is_sorted(c.snapshot_times.begin(), c.snapshot_times.end())) {
    v.push_back("snapshot times must be sorted ascending");
  }
  for (double s : c.snapshot_times) {
    if (s < 0.0 || s > c.tau_max) {
      v.push_back("snapshot time " + std::to_string(s) +
                  " outside [0, tau_max]");
      break;
    }
  }
  return v;
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::kConverged: return "converged";
    case Termination::kTauMax: return "tau_max";
    case Termination::kError: return "error";
  }
  return "unknown";
}

bool meets_stop_criteria(const DiagnosticsRecord& r, bool free_tf,
                         const IntegratorConfig& c) {
  return r.ef_norm <= c.eps_feas && r.ex0_norm <= c.eps_feas &&
         r.pu_norm <= c.eps_opt &&
         (!free_tf || std::abs(r.transversality) <= c.eps_opt);
}

EvolutionRun integrate_tau(const OcpProblem& problem,
                           const GridField& initial_field,
                           const EvolutionGains& gains,
                           const IntegratorConfig& config,
                           const DiagnosticsConfig& diag_config,
                           const EvolutionOptions& options) {
  validate_problem(problem);
  check_field(problem, initial_field);
  validate_gains(gains, problem);
  if (const auto v = integrator_violations(config); !v.empty()) {
    throw std::invalid_argument("integrator config: " + v.front());
  }

  const PackLayout layout = PackLayout::of(problem, initial_field);
  const bool free_tf = layout.free_tf;
  const double t0 = initial_field.grid.t0;
  const double min_gap = config.min_tf_gap > 0.0
                             ? config.min_tf_gap
                             : 1e-3 * (initial_field.grid.tf - t0);

  EvolutionRun run;
  run.packed_size = layout.size();
  run.final_field = initial_field;

  auto guard_tf = [&](double tau, const GridField& field) {
    if (free_tf && field.grid.tf - t0 < min_gap) {
      throw TerminalTimeCollapse(tau, field.grid.tf);
    }
  };

  auto rhs = [&](double tau, const Vector& state) {
    const GridField field = unpack(state, layout);
    guard_tf(tau, field);
    const TransitionTable table =
        build_transition_table(problem, field, options.transition);
    const RhsField r = epde_rhs(problem, field, gains, table, options);
    Vector rate(layout.size());
    const Eigen::Index nx = Eigen::Index(layout.N) * layout.n;
    const Eigen::Index nu = Eigen::Index(layout.N) * layout.m;
    rate.head(nx) = Eigen::Map<const Vector>(r.dx_dtau.data(), nx);
    rate.segment(nx, nu) = Eigen::Map<const Vector>(r.du_dtau.data(), nu);
    if (free_tf) rate(nx + nu) = r.dtf_dtau;
    return rate;
  };

  std::size_t next_snapshot = 0;
  bool converged = false;
  auto observer = [&](double tau, const Vector& state) {
    GridField field = unpack(state, layout);
    guard_tf(tau, field);
    const TransitionTable table =
        build_transition_table(problem, field, options.transition);
    run.records.push_back(evaluate_diagnostics(problem, field, table, tau));
    while (next_snapshot < config.snapshot_times.size() &&
           config.snapshot_times[next_snapshot] <= tau) {
      if (config.snapshot_times[next_snapshot] == tau) {
        run.snapshots.emplace_back(tau, field);
      }
      ++next_snapshot;
    }
    run.final_tau = tau;
    run.final_field = std::move(field);
    converged = meets_stop_criteria(run.records.back(), free_tf, config);
    return converged && config.stop_on_convergence;
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

  Vector state = pack(initial_field, layout);
  try {
    const OdeOutcome out =
        integrate_ode(rhs, state, 0.0, config.tau_max, settings, observer);
    run.stats = {out.accepted, out.rejected, out.rhs_evaluations};
    switch (out.status) {
      case OdeStatus::kReachedEnd:
      case OdeStatus::kStoppedByObserver:
        run.termination =
            converged ? Termination::kConverged : Termination::kTauMax;
        break;
      case OdeStatus::kStepUnderflow:
        run.termination = Termination::kError;
        run.message = "step size underflow at tau = " + std::to_string(out.t);
        break;
      case OdeStatus::kNonFiniteState:
        run.termination = Termination::kError;
        run.message = "non-finite state at tau = " + std::to_string(out.t);
        break;
      case OdeStatus::kMaxStepsExceeded:
        run.termination = Termination::kError;
        run.message = "step limit reached at tau = " + std::to_string(out.t);
        break;
    }
  } catch (const TerminalTimeCollapse& e) {
    run.termination = Termination::kError;
    run.message = e.what();
  } catch (const NonFiniteEvaluation& e) {
    run.termination = Termination::kError;
    run.message = std::string(e.what()) + " near tau = " +
                  std::to_string(run.final_tau);
  } catch (const std::runtime_error& e) {
    run.termination = Termination::kError;
    run.message = std::string(e.what()) + " near tau = " +
                  std::to_string(run.final_tau);
  }

  if (!run.records.empty()) {
    run.constants = constants_for_run(run.records, gains, t0, diag_config);
    assign_lyapunov(run.records, run.constants);
  }
  return run;
}

}  // namespace vem
