#include "vem/transition.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "vem/problems.hpp"

namespace vem {
namespace {

double relative_gap(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

LqSpec lti_spec(const Matrix& A, double tf) {
  LqSpec s = example1_lq_spec();
  s.A = A;
  s.tf = tf;
  return s;
}

// Smooth field with a few random modes per column, scaled per column.
GridField random_field(const OcpProblem& p, const Grid& g, unsigned seed,
                       const Vector& x_scale, const Vector& u_scale) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto column = [&](double scale) {
    const double a = unit(rng), b = unit(rng), c = unit(rng), w = 1 + 2 * std::abs(unit(rng));
    Vector v(g.N);
    const double H = g.horizon();
    for (int i = 0; i < g.N; ++i) {
      const double s = (g.time(i) - g.t0) / H;
      v(i) = scale * (a + b * std::sin(w * 3.0 * s) + c * std::cos(2.0 * s));
    }
    return v;
  };
  GridField f{g, NodeMatrix(g.N, p.state_dim), NodeMatrix(g.N, p.control_dim)};
  for (int k = 0; k < p.state_dim; ++k) f.x.col(k) = column(x_scale(k));
  for (int k = 0; k < p.control_dim; ++k) f.u.col(k) = column(u_scale(k));
  return f;
}

// Example 2 in solver units. In metres the table is ill-conditioned
// (entries near 2.5e4) and flags itself.
OcpProblem scaled_example2() {
  return apply_scaling(example2_problem(), example2_default_scaling());
}

GridField example2_random_field(unsigned seed) {
  return random_field(scaled_example2(), build_grid(51, 0.0, 25.0), seed,
                      Vector::Ones(3), Vector::Ones(1));
}

TEST(TransitionTable, ZeroGeneratorGivesIdentity) {
  const OcpProblem p = make_lq_problem(lti_spec(Matrix::Zero(2, 2), 3.0));
  const GridField f = zero_field(p, build_grid(11, 0.0, 3.0));
  const TransitionTable t = build_transition_table(p, f);
  for (int i = 0; i < 11; ++i) {
    EXPECT_TRUE(t.fundamental[i].isIdentity(0.0));
  }
}

TEST(TransitionTable, DoubleIntegratorClosedForm) {
  const OcpProblem p = example1_problem();
  const Grid g = build_grid(61, 0.0, 3.0);
  const TransitionTable t = build_transition_table(p, zero_field(p, g));
  EXPECT_FALSE(t.flagged);
  EXPECT_TRUE(t.fundamental[0].isIdentity(0.0));
  for (int i = 0; i < 61; i += 7) {
    for (int j = 0; j <= i; j += 5) {
      Matrix expected(2, 2);
      expected << 1, g.time(i) - g.time(j), 0, 1;
      EXPECT_LE((phi(t, i, j) - expected).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
  Matrix end(2, 2);
  end << 1, 3, 0, 1;
  EXPECT_LE((phi(t, 60, 0) - end).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TransitionTable, MatchesMatrixExponential) {
  Matrix A(2, 2);
  A << -0.5, 1.0, -2.0, -0.3;
  const OcpProblem p = make_lq_problem(lti_spec(A, 3.0));
  const Grid g = build_grid(61, 0.0, 3.0);
  const TransitionTable t = build_transition_table(p, zero_field(p, g));
  for (int i = 0; i < 61; i += 6) {
    for (int j = 0; j <= i; j += 4) {
      const Matrix expected = (A * (g.time(i) - g.time(j))).exp();
      EXPECT_LE(relative_gap(phi(t, i, j), expected), 1e-6) << i << "," << j;
    }
  }
}

TEST(TransitionTable, InverseAndSemigroup) {
  const OcpProblem p = scaled_example2();
  const GridField f = example2_random_field(1);
  const TransitionTable t = build_transition_table(p, f);
  for (int i = 0; i < f.grid.N; ++i) {
    EXPECT_LE(relative_gap(t.fundamental[i] * t.fundamental_inverse[i],
                           Matrix::Identity(3, 3)),
              1e-8);
    EXPECT_LE(relative_gap(phi(t, i, i), Matrix::Identity(3, 3)), 1e-10);
  }
  for (int i = 0; i < f.grid.N; i += 5) {
    for (int j = 0; j <= i; j += 3) {
      for (int k = 0; k <= j; k += 4) {
        EXPECT_LE(relative_gap(phi(t, i, j) * phi(t, j, k), phi(t, i, k)), 1e-6);
      }
    }
  }
}

TEST(TransitionTable, MatchesFineStepPairwiseIntegration) {
  const OcpProblem p = scaled_example2();
  for (unsigned seed : {2u, 3u}) {
    const GridField f = example2_random_field(seed);
    const TransitionTable t = build_transition_table(p, f);
    for (int i = 0; i < f.grid.N; i += 10) {
      for (int j = 0; j <= i; j += 10) {
        const Matrix fine = integrate_transition(p, f, i, j, 400);
        EXPECT_LE(relative_gap(phi(t, i, j), fine), 1e-6);
      }
    }
  }
}

TEST(TransitionTable, LiouvilleDeterminant) {
  // dx/dt = [-x1 + x2^2 + u, -(1 + x1^2) x2]: trace f_x = -2 - x1^2.
  OcpProblem p = example1_problem();
  p.f = [](const Vector& x, const Vector& u, double) {
    Vector d(2);
    d << -x(0) + x(1) * x(1) + u(0), -(1 + x(0) * x(0)) * x(1);
    return d;
  };
  p.f_x = [](const Vector& x, const Vector&, double) {
    Matrix a(2, 2);
    a << -1, 2 * x(1), -2 * x(0) * x(1), -(1 + x(0) * x(0));
    return a;
  };
  const Grid g = build_grid(41, 0.0, 2.0);
  const GridField f = random_field(p, g, 9, Vector::Ones(2), Vector::Ones(1));
  const TransitionTable t = build_transition_table(p, f);

  // Exact integral of the trace along the piecewise-linear interpolant.
  double integral = 0.0;
  for (int i = 0; i < g.N; ++i) {
    if (i > 0) {
      const double a = f.x(i - 1, 0), b = f.x(i, 0);
      const double mean_sq = (a * a + a * b + b * b) / 3.0;
      integral += g.spacing() * (-2.0 - mean_sq);
    }
    const double expected = std::exp(integral);
    EXPECT_NEAR(t.fundamental[i].determinant() / expected, 1.0, 1e-5) << i;
  }
}

TEST(TransitionTable, TransposeIsElementwise) {
  const TransitionTable t =
      build_transition_table(scaled_example2(), example2_random_field(4));
  const Matrix m = phi(t, 30, 10);
  const Matrix mt = m.transpose();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) EXPECT_EQ(mt(c, r), m(r, c));
  }
}

TEST(TransitionTable, FlaggedTableUsesPairwisePath) {
  const OcpProblem p = scaled_example2();
  const GridField f = example2_random_field(5);
  TransitionOptions opts;
  opts.condition_limit = 1.0;  // every table exceeds this
  const TransitionTable flagged = build_transition_table(p, f, opts);
  EXPECT_TRUE(flagged.flagged);
  EXPECT_TRUE(flagged.uses_pairwise());
  EXPECT_THROW(phi(flagged, 3, 1), FlaggedTransitionTable);

  const TransitionTable fast = build_transition_table(p, f);
  EXPECT_FALSE(fast.uses_pairwise());
  for (int i = 0; i < f.grid.N; i += 7) {
    for (int j = 0; j <= i; j += 3) {
      EXPECT_LE(relative_gap(flagged.pairwise_at(i, j), phi(fast, i, j)), 1e-6);
    }
  }

  const NodeMatrix sources = NodeMatrix::NullaryExpr(
      f.grid.N, 3, [](Eigen::Index r, Eigen::Index c) {
        return std::sin(0.1 * static_cast<double>(r) + static_cast<double>(c));
      });
  const NodeMatrix fwd_fast = forward_transport(fast, f.grid, sources);
  const NodeMatrix fwd_pair = forward_transport(flagged, f.grid, sources);
  EXPECT_LE((fwd_fast - fwd_pair).cwiseAbs().maxCoeff(),
            1e-3 * fwd_fast.cwiseAbs().maxCoeff());
  const NodeMatrix bwd_fast = backward_transport(fast, f.grid, sources);
  const NodeMatrix bwd_pair = backward_transport(flagged, f.grid, sources);
  EXPECT_LE((bwd_fast - bwd_pair).cwiseAbs().maxCoeff(),
            1e-3 * bwd_fast.cwiseAbs().maxCoeff());
}

TEST(Transport, DoubleIntegratorConstantSource) {
  // int_0^t [[1, t - s], [0, 1]] [0, 1]' ds = [t^2 / 2, t].
  const OcpProblem p = example1_problem();
  const Grid g = build_grid(31, 0.0, 3.0);
  const TransitionTable t = build_transition_table(p, zero_field(p, g));
  NodeMatrix src = NodeMatrix::Zero(g.N, 2);
  src.col(1).setOnes();
  const NodeMatrix fwd = forward_transport(t, g, src);
  const NodeMatrix bwd = backward_transport(t, g, src);
  for (int i = 0; i < g.N; ++i) {
    const double ti = g.time(i), rest = 3.0 - ti;
    EXPECT_NEAR(fwd(i, 0), 0.5 * ti * ti, 1e-12);
    EXPECT_NEAR(fwd(i, 1), ti, 1e-12);
    // int_t^3 [[1, 0], [s - t, 1]] [0, 1]' ds = [0, 3 - t].
    EXPECT_NEAR(bwd(i, 0), 0.0, 1e-12);
    EXPECT_NEAR(bwd(i, 1), rest, 1e-12);
  }
}

TEST(TransitionTable, PhysicalUnitsFlagIllConditioning) {
  const OcpProblem p = example2_problem();
  const GridField f = random_field(p, build_grid(51, 0.0, 25.0), 7,
                                   Vector{{1e4, 1e4, 1.0}}, Vector::Ones(1));
  const TransitionTable t = build_transition_table(p, f);
  EXPECT_TRUE(t.flagged);
  EXPECT_GT(t.condition_estimate, 1e8);
}

TEST(TransitionTable, RejectsMismatchedField) {
  const OcpProblem p = scaled_example2();
  GridField f = example2_random_field(6);
  f.u.resize(f.grid.N, 2);
  f.u.setZero();
  EXPECT_THROW(build_transition_table(p, f), std::invalid_argument);
}

}  // namespace
}  // namespace vem
