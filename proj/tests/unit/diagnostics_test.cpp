#include "vem/diagnostics.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "vem/oracles.hpp"
#include "vem/problems.hpp"
#include "vem/solver.hpp"

namespace vem {
namespace {

EvolutionGains example1_gains() {
  return EvolutionGains::isotropic(2, 1, 2e-2, 0.1, 0.1, 0.0);
}

// x1 = 1 + t, x2 = 1, u = 0 solves the double integrator exactly and the
// difference stencil is exact on lines, so every error term is zero.
GridField exactly_feasible_field(const Grid& g) {
  GridField f{g, NodeMatrix(g.N, 2), NodeMatrix::Zero(g.N, 1)};
  f.x.col(0) = g.times().array() + 1.0;
  f.x.col(1).setOnes();
  return f;
}

TEST(PerformanceIndex, ZeroFieldIsZero) {
  const OcpProblem p = example1_problem();
  EXPECT_EQ(performance_index(p, zero_field(p, build_grid(61, 0.0, 3.0))), 0.0);
}

TEST(PerformanceIndex, HandComputedOnFeasibleLine) {
  // With s = 1 + t: terminal 1/2 (16 + 2) = 9, running
  // 1/2 int_1^4 (2 s^2 + 2 s + 4) ds = 34.5, and the trapezoid adds
  // h^2 / 12 * 3 * 2 for the quadratic integrand.
  const OcpProblem p = example1_problem();
  const double h = 0.05;
  EXPECT_NEAR(performance_index(p, exactly_feasible_field(build_grid(61, 0.0, 3.0))),
              43.5 + h * h / 2.0, 1e-12);
}

TEST(OptimalityResiduals, ZeroFieldCollapses) {
  const OcpProblem p = example1_problem();
  const GridField f = zero_field(p, build_grid(61, 0.0, 3.0));
  const OptimalityResiduals r =
      optimality_residuals(p, f, build_transition_table(p, f));
  EXPECT_EQ(r.pu_norm, 0.0);
  EXPECT_EQ(r.transversality, 0.0);
}

TEST(Lyapunov, ZeroFieldIsInitialErrorNorm) {
  const OcpProblem p = example1_problem();
  const GridField f = zero_field(p, build_grid(61, 0.0, 3.0));
  const LyapunovConstants c = select_lyapunov_constants(example1_gains(), 3.0, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(lyapunov_value(p, f, c), std::sqrt(2.0));
}

TEST(Lyapunov, FeasibleFieldReducesToScaledCost) {
  const OcpProblem p = example1_problem();
  const GridField f = exactly_feasible_field(build_grid(61, 0.0, 3.0));
  const LyapunovConstants c = select_lyapunov_constants(example1_gains(), 3.0, 2.0, 0.5);
  EXPECT_NEAR(lyapunov_value(p, f, c), c.c1 * performance_index(p, f), 1e-13);
}

TEST(Lyapunov, RecordAndFieldFormsAgree) {
  const OcpProblem p = example1_problem();
  const Grid g = build_grid(61, 0.0, 3.0);
  GridField f = zero_field(p, g);
  for (int i = 0; i < g.N; ++i) {
    f.x(i, 0) = std::cos(g.time(i));
    f.x(i, 1) = 0.3 * g.time(i);
    f.u(i, 0) = std::sin(3.0 * g.time(i));
  }
  const DiagnosticsRecord r =
      evaluate_diagnostics(p, f, build_transition_table(p, f), 2.5);
  EXPECT_EQ(r.tau, 2.5);
  EXPECT_EQ(r.tf, 3.0);
  EXPECT_NEAR(r.ex0_norm, 1.0, 1e-15);
  const LyapunovConstants c = select_lyapunov_constants(example1_gains(), 3.0, 1.3, 0.7);
  EXPECT_NEAR(lyapunov_value(r, c), lyapunov_value(p, f, c), 1e-12);
}

TEST(LyapunovConstants, TenthGainsOnThreeSecondHorizon) {
  const LyapunovConstants c = select_lyapunov_constants(example1_gains(), 3.0, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(c.c1, 1.0 / 18.0);
  EXPECT_EQ(c.c2, 1.0);
  EXPECT_DOUBLE_EQ(c.kf_min_eig, 0.1);
  EXPECT_DOUBLE_EQ(c.kx0_max_eig, 0.1);
}

TEST(LyapunovConstants, FreeTerminalTimeStrictlyAboveBound) {
  const EvolutionGains gains = EvolutionGains::isotropic(3, 1, 1e-6, 0.1, 0.1, 2e-4);
  const LyapunovConstants c = select_lyapunov_constants(gains, 25.0, 2.0, 3.0);
  const double c1_bound = std::min(1.0 / (3.0 * 625.0), 1.0 / (2.0 * 25.0));
  EXPECT_DOUBLE_EQ(c.c1, 0.5 * c1_bound);
  const double c2_bound = 2e-4 / (2.0 * c.c1 * 0.1);
  EXPECT_DOUBLE_EQ(c.c2, 2.0 * c2_bound);
}

TEST(LyapunovConstants, AnisotropicGainsUseEigenvalueRatio) {
  EvolutionGains gains = example1_gains();
  gains.K_f = Matrix{{0.2, 0.0}, {0.0, 0.05}};
  const LyapunovConstants c = select_lyapunov_constants(gains, 3.0, 1.0, 100.0);
  EXPECT_DOUBLE_EQ(c.c1, 0.5 * std::min(1.0 / (100.0 * 9.0), 0.25 / 3.0));
  const LyapunovConstants d = select_lyapunov_constants(gains, 3.0, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(d.c1, 0.5 * 0.25 / 3.0);
}

TEST(LyapunovConstants, LargerBoundsNeverRaiseC1) {
  double previous = std::numeric_limits<double>::infinity();
  for (double d1 : {0.1, 0.2, 0.4, 0.8, 1.6, 3.2}) {
    const double c1 = select_lyapunov_constants(example1_gains(), 3.0, d1, 1.0).c1;
    EXPECT_LE(c1, previous);
    previous = c1;
  }
  const double a = select_lyapunov_constants(example1_gains(), 3.0, 4.0, 0.01).c1;
  const double b = select_lyapunov_constants(example1_gains(), 3.0, 8.0, 0.01).c1;
  EXPECT_DOUBLE_EQ(b, 0.5 * a);
}

TEST(LyapunovConstants, RejectsBadInputs) {
  EXPECT_THROW(select_lyapunov_constants(example1_gains(), 3.0, 0.0, 1.0),
               std::invalid_argument);
  EXPECT_THROW(select_lyapunov_constants(example1_gains(), 0.0, 1.0, 1.0),
               std::invalid_argument);
  EvolutionGains bad = example1_gains();
  bad.K_f(1, 1) = -0.1;
  EXPECT_THROW(select_lyapunov_constants(bad, 3.0, 1.0, 1.0), std::invalid_argument);
}

TEST(EstimateBounds, ZeroFieldGivesZero) {
  const OcpProblem p = example1_problem();
  const GridField f = zero_field(p, build_grid(61, 0.0, 3.0));
  const BoundEstimate b = estimate_bounds(p, f, build_transition_table(p, f));
  EXPECT_EQ(b.d1, 0.0);
  EXPECT_EQ(b.d2, 0.0);
}

TEST(EstimateBounds, TerminalGradientOnlyCase) {
  // No running cost and no dynamics: p_f reduces to phi_x = F x, p_x0 to
  // zero. F = diag(1, 2) gives phi_x = [3, 8].
  LqSpec spec = example1_lq_spec();
  spec.A.setZero();
  spec.Q.setZero();
  const OcpProblem p = make_lq_problem(spec);
  const Grid g = build_grid(21, 0.0, 3.0);
  GridField f = zero_field(p, g);
  f.x.rowwise() = Eigen::RowVector2d(3.0, 4.0);
  const BoundEstimate b = estimate_bounds(p, f, build_transition_table(p, f));
  EXPECT_NEAR(b.d1, 1.5 * std::sqrt(73.0), 1e-13);
  EXPECT_EQ(b.d2, 0.0);
}

TEST(EstimateBounds, CoverAdjointOnFeasibleFields) {
  const OcpProblem p = example1_problem();
  const Grid g = build_grid(61, 0.0, 3.0);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double a = unit(rng), b = unit(rng);
    NodeMatrix u(g.N, 1);
    for (int i = 0; i < g.N; ++i) u(i, 0) = a + b * std::sin(2.0 * g.time(i));
    const GridField f = feasible_initialize(p, u, g);
    const BoundEstimate bounds = estimate_bounds(p, f, build_transition_table(p, f));
    const AdjointSolution adj = adjoint_oracle(p, f);
    for (int i = 0; i < g.N; ++i) {
      EXPECT_GE(bounds.d1, adj.lambda.row(i).norm()) << trial << " " << i;
    }
  }
}

TEST(ConstantsForRun, RunningMaximaAndFloor) {
  std::vector<DiagnosticsRecord> records(3);
  records[0].tf = 3.0;
  records[1].tf = 3.0;
  records[1].pf_max = 2.0;
  records[2].tf = 3.0;
  records[2].px0_max = 0.5;
  const LyapunovConstants c = constants_for_run(records, example1_gains(), 0.0);
  EXPECT_DOUBLE_EQ(c.d1, 3.0);
  EXPECT_DOUBLE_EQ(c.d2, 0.75);
  EXPECT_EQ(c.horizon, 3.0);

  const std::vector<DiagnosticsRecord> zeros(2, records[0]);
  const LyapunovConstants floor = constants_for_run(zeros, example1_gains(), 0.0);
  EXPECT_EQ(floor.d1, 1e-6);
  EXPECT_EQ(floor.d2, 1e-6);
  EXPECT_THROW(constants_for_run({}, example1_gains(), 0.0), std::invalid_argument);
}

TEST(AssignLyapunov, FillsValuesAndSlopes) {
  std::vector<DiagnosticsRecord> records(2);
  records[0].ex0_two_norm = 2.0;
  records[1].tau = 0.5;
  records[1].ex0_two_norm = 1.0;
  records[1].J = 3.0;
  const LyapunovConstants c = select_lyapunov_constants(example1_gains(), 3.0, 1.0, 1.0);
  assign_lyapunov(records, c);
  EXPECT_DOUBLE_EQ(records[0].V, 2.0);
  EXPECT_DOUBLE_EQ(records[1].V, 1.0 + 3.0 / 18.0);
  EXPECT_DOUBLE_EQ(records[1].dV_estimate, (records[1].V - 2.0) / 0.5);
}

TEST(Lyapunov, NonincreasingFromInfeasibleStart) {
  const OcpProblem p = example1_problem();
  const Grid g = build_grid(61, 0.0, 3.0);
  GridField f = zero_field(p, g);
  for (int i = 0; i < g.N; ++i) {
    const double t = g.time(i);
    f.x(i, 0) = 2.0 * std::sin(t);
    f.x(i, 1) = -t;
    f.u(i, 0) = 1.0 - t;
  }
  IntegratorConfig c;
  c.tau_max = 100.0;
  c.stop_on_convergence = false;
  const EvolutionRun run = integrate_tau(p, f, example1_gains(), c);
  ASSERT_EQ(run.termination, Termination::kTauMax) << run.message;
  for (std::size_t k = 1; k < run.records.size(); ++k) {
    const double prev = run.records[k - 1].V;
    EXPECT_LE(run.records[k].V, prev + 10.0 * c.rel_tol * std::abs(prev))
        << run.records[k].tau;
  }
}

}  // namespace
}  // namespace vem
