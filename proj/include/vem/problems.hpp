#pragma once

#include "vem/ocp_model.hpp"

namespace vem {

/// Time-invariant linear-quadratic problem
///   dx/dt = A x + B u,  J = 1/2 x(tf)' F x(tf) + 1/2 int (x'Qx + u'Ru) dt.
struct LqSpec {
  Matrix A;
  Matrix B;
  Matrix Q;
  Matrix R;
  Matrix F;
  Vector x0;
  double t0 = 0.0;
  double tf = 1.0;
};

OcpProblem make_lq_problem(const LqSpec& spec, std::string name = "lq");

/// Double integrator on [0, 3] with x0 = [1, 1]', F = diag(1, 2),
/// Q = [[2, 1], [1, 4]], R = 1/2.
LqSpec example1_lq_spec();
OcpProblem example1_problem();

/// Constant-speed missile intercepting a constant-speed target with state
/// (x, y, theta_M) and normal acceleration u. Angles are radians.
struct HomingMissileParams {
  double missile_speed = 1000.0;  // m/s
  double target_speed = 500.0;    // m/s
  double target_azimuth = 0.0;    // rad; default set by the constructor below
  double control_weight = 5e-4;   // R
  Vector terminal_weights;        // diagonal of F
  Vector x0;                      // [m, m, rad]
  double tf_guess = 25.0;         // s

  HomingMissileParams();
};

OcpProblem example2_problem(const HomingMissileParams& params = {});

/// Positions / 1e4, angle unscaled (radians), control / 1e2, time unscaled.
ScalingSpec example2_default_scaling();

double degrees_to_radians(double degrees);

}  // namespace vem
