#include "vem/ocp_model.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "vem/diagnostics.hpp"
#include "vem/discretization.hpp"
#include "vem/problems.hpp"

namespace vem {
namespace {

std::vector<SamplePoint> random_samples(const OcpProblem& p, int count,
                                        unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<SamplePoint> out;
  for (int k = 0; k < count; ++k) {
    SamplePoint s;
    s.x = Vector::NullaryExpr(p.state_dim, [&] { return unit(rng); });
    s.u = Vector::NullaryExpr(p.control_dim, [&] { return unit(rng); });
    s.t = p.t0 + (0.5 + 0.5 * unit(rng)) * (p.tf - p.t0);
    out.push_back(s);
  }
  return out;
}

TEST(CheckDerivatives, LinearDynamicsHaveExactJacobian) {
  const OcpProblem p = example1_problem();
  const SamplePoint s{Vector::Ones(2), Vector::Zero(1), 0.0};
  const DerivativeReport r = check_derivatives(p, {s});
  EXPECT_TRUE(r.ok());
  EXPECT_LE(r.at("f_x").max_relative_error, 1e-9);
}

TEST(CheckDerivatives, ControlWeightPartial) {
  const OcpProblem p = example1_problem();
  const Vector x = Vector::Ones(2);
  const Vector u = Vector::Ones(1);
  EXPECT_DOUBLE_EQ(p.L_u(x, u, 0.0)(0), 0.5);
  const DerivativeReport r = check_derivatives(p, {{x, u, 0.0}});
  EXPECT_LE(r.at("L_u").max_relative_error, 1e-8);
}

TEST(CheckDerivatives, FlagsCorruptedJacobian) {
  OcpProblem p = example1_problem();
  const auto good = p.f_x;
  p.f_x = [good](const Vector& x, const Vector& u, double t) {
    Matrix a = good(x, u, t);
    a(0, 1) += 0.1;
    return a;
  };
  const DerivativeReport r =
      check_derivatives(p, {{Vector::Ones(2), Vector::Zero(1), 0.0}});
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(r.at("f_x").flagged);
  EXPECT_NEAR(r.at("f_x").max_relative_error, 0.1, 1e-6);
  EXPECT_EQ(r.at("f_x").worst_sample, 0);
}

TEST(CheckDerivatives, ReportsNonFiniteEvaluation) {
  OcpProblem p = example1_problem();
  p.L = [](const Vector& x, const Vector&, double) {
    return x(0) > 0.5 ? std::nan("") : 0.0;
  };
  const DerivativeReport r = check_derivatives(
      p, {{Vector::Zero(2), Vector::Zero(1), 0.0},
          {Vector::Ones(2), Vector::Zero(1), 0.0}});
  EXPECT_TRUE(r.non_finite);
  EXPECT_EQ(r.non_finite_sample, 1);
  EXPECT_FALSE(r.ok());
}

TEST(CheckDerivatives, BuiltInProblemsOnHundredRandomPoints) {
  for (const OcpProblem& p : {example1_problem(), example2_problem()}) {
    const DerivativeReport r = check_derivatives(p, random_samples(p, 100, 3));
    EXPECT_TRUE(r.ok()) << p.name;
    for (const auto& c : r.partials) {
      EXPECT_LE(c.max_relative_error, 1e-4) << p.name << " " << c.partial;
    }
  }
}

TEST(CheckDerivatives, TerminalHessianIsSymmetric) {
  const OcpProblem p = example2_problem();
  for (const auto& s : random_samples(p, 20, 11)) {
    const Matrix h = p.phi_xx(s.x, s.t);
    EXPECT_TRUE(h.isApprox(h.transpose(), 1e-14));
  }
}

TEST(FiniteDifferenceFallback, MatchesAnalyticPartials) {
  const OcpProblem analytic = example2_problem();
  OcpProblem bare = analytic;
  bare.f_x = nullptr;
  bare.f_u = nullptr;
  bare.L_x = nullptr;
  bare.L_u = nullptr;
  bare.phi_x = nullptr;
  bare.phi_t = nullptr;
  bare.phi_xx = nullptr;
  bare.phi_tx = nullptr;
  EXPECT_THROW(validate_problem(bare), std::invalid_argument);
  const OcpProblem fd = with_finite_difference_fallback(bare);
  EXPECT_NO_THROW(validate_problem(fd));
  for (const auto& s : random_samples(analytic, 10, 5)) {
    EXPECT_TRUE(fd.f_x(s.x, s.u, s.t)
                    .isApprox(analytic.f_x(s.x, s.u, s.t), 1e-6));
    EXPECT_TRUE(fd.f_u(s.x, s.u, s.t)
                    .isApprox(analytic.f_u(s.x, s.u, s.t), 1e-6));
    EXPECT_NEAR((fd.L_u(s.x, s.u, s.t) - analytic.L_u(s.x, s.u, s.t)).norm(),
                0.0, 1e-6);
    EXPECT_TRUE(fd.phi_x(s.x, s.t).isApprox(analytic.phi_x(s.x, s.t), 1e-6));
    EXPECT_LE((fd.phi_xx(s.x, s.t) - analytic.phi_xx(s.x, s.t))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-5);
  }
}

TEST(ValidateProblem, RejectsInconsistentDimensions) {
  OcpProblem p = example1_problem();
  p.x0 = Vector::Ones(3);
  EXPECT_THROW(validate_problem(p), std::invalid_argument);
  p = example1_problem();
  p.control_dim = 0;
  EXPECT_THROW(validate_problem(p), std::invalid_argument);
}

TEST(Scaling, IdentityLeavesEvaluatorsUnchanged) {
  const OcpProblem p = example2_problem();
  const OcpProblem s = apply_scaling(p, ScalingSpec::identity(3, 1));
  for (const auto& pt : random_samples(p, 5, 9)) {
    EXPECT_TRUE(s.f(pt.x, pt.u, pt.t).isApprox(p.f(pt.x, pt.u, pt.t)));
    EXPECT_DOUBLE_EQ(s.L(pt.x, pt.u, pt.t), p.L(pt.x, pt.u, pt.t));
    EXPECT_DOUBLE_EQ(s.phi(pt.x, pt.t), p.phi(pt.x, pt.t));
  }
}

TEST(Scaling, HomingMissileInitialState) {
  const OcpProblem s = apply_scaling(example2_problem(), example2_default_scaling());
  EXPECT_DOUBLE_EQ(s.x0(0), 1.0);
  EXPECT_DOUBLE_EQ(s.x0(1), 0.5);
  EXPECT_DOUBLE_EQ(s.x0(2), 0.0);
}

TEST(Scaling, RejectsNonPositiveScales) {
  ScalingSpec spec = example2_default_scaling();
  spec.control_scales(0) = 0.0;
  EXPECT_FALSE(scaling_violations(spec, 3, 1).empty());
  EXPECT_THROW(apply_scaling(example2_problem(), spec), std::invalid_argument);
  spec = example2_default_scaling();
  spec.time_scale = -1.0;
  EXPECT_FALSE(scaling_violations(spec, 3, 1).empty());
  EXPECT_TRUE(scaling_violations(example2_default_scaling(), 3, 1).empty());
}

TEST(Scaling, ScaledPartialsStayConsistent) {
  ScalingSpec spec = example2_default_scaling();
  spec.time_scale = 2.0;
  const OcpProblem s = apply_scaling(example2_problem(), spec);
  const DerivativeReport r = check_derivatives(s, random_samples(s, 50, 21));
  EXPECT_TRUE(r.ok());
}

TEST(Scaling, FieldRoundTripAndCostInvariance) {
  const OcpProblem p = example2_problem();
  ScalingSpec spec = example2_default_scaling();
  spec.time_scale = 2.5;
  const OcpProblem s = apply_scaling(p, spec);

  std::mt19937 rng(4);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  GridField f;
  f.grid = build_grid(21, 0.0, 25.0);
  f.x = NodeMatrix::NullaryExpr(21, 3, [&] { return 1e4 * unit(rng); });
  f.x.col(2) = f.x.col(2) * 1e-4;
  f.u = NodeMatrix::NullaryExpr(21, 1, [&] { return 100 * unit(rng); });

  const GridField scaled = scale_field(f, spec);
  const GridField back = unscale_field(scaled, spec);
  EXPECT_LE((back.x - f.x).cwiseAbs().maxCoeff(),
            4 * std::numeric_limits<double>::epsilon() *
                f.x.cwiseAbs().maxCoeff());
  EXPECT_LE((back.u - f.u).cwiseAbs().maxCoeff(),
            4 * std::numeric_limits<double>::epsilon() *
                f.u.cwiseAbs().maxCoeff());
  EXPECT_DOUBLE_EQ(back.grid.tf, f.grid.tf);

  // L' = T L and dt' = dt / T: the trapezoid cost is unchanged.
  EXPECT_NEAR(performance_index(s, scaled), performance_index(p, f),
              1e-9 * std::abs(performance_index(p, f)));
}

}  // namespace
}  // namespace vem
