#include "vem/problems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vem {

OcpProblem make_lq_problem(const LqSpec& s, std::string name) {
  const int n = static_cast<int>(s.A.rows());
  const int m = static_cast<int>(s.B.cols());
  if (s.A.cols() != n || s.B.rows() != n || s.Q.rows() != n ||
      s.Q.cols() != n || s.F.rows() != n || s.F.cols() != n ||
      s.R.rows() != m || s.R.cols() != m || s.x0.size() != n) {
    throw std::invalid_argument("inconsistent LQ dimensions");
  }
  OcpProblem p;
  p.name = std::move(name);
  p.state_dim = n;
  p.control_dim = m;
  p.t0 = s.t0;
  p.tf = s.tf;
  p.terminal_mode = TerminalMode::kFixed;
  p.x0 = s.x0;

  const Matrix A = s.A, B = s.B, Q = s.Q, R = s.R, F = s.F;
  p.f = [A, B](const Vector& x, const Vector& u, double) {
    return Vector(A * x + B * u);
  };
  p.L = [Q, R](const Vector& x, const Vector& u, double) {
    return 0.5 * (x.dot(Q * x) + u.dot(R * u));
  };
  p.phi = [F](const Vector& x, double) { return 0.5 * x.dot(F * x); };
  p.f_x = [A](const Vector&, const Vector&, double) { return A; };
  p.f_u = [B](const Vector&, const Vector&, double) { return B; };
  p.L_x = [Q](const Vector& x, const Vector&, double) {
    return Vector(0.5 * (Q + Q.transpose()) * x);
  };
  p.L_u = [R](const Vector&, const Vector& u, double) {
    return Vector(0.5 * (R + R.transpose()) * u);
  };
  p.phi_x = [F](const Vector& x, double) {
    return Vector(0.5 * (F + F.transpose()) * x);
  };
  p.phi_t = [](const Vector&, double) { return 0.0; };
  p.phi_xx = [F](const Vector&, double) {
    return Matrix(0.5 * (F + F.transpose()));
  };
  p.phi_tx = [n](const Vector&, double) { return Vector(Vector::Zero(n)); };
  return p;
}

LqSpec example1_lq_spec() {
  LqSpec s;
  s.A = (Matrix(2, 2) << 0, 1, 0, 0).finished();
  s.B = (Matrix(2, 1) << 0, 1).finished();
  s.Q = (Matrix(2, 2) << 2, 1, 1, 4).finished();
  s.R = Matrix::Constant(1, 1, 0.5);
  s.F = (Matrix(2, 2) << 1, 0, 0, 2).finished();
  s.x0 = (Vector(2) << 1, 1).finished();
  s.t0 = 0.0;
  s.tf = 3.0;
  return s;
}

OcpProblem example1_problem() {
  return make_lq_problem(example1_lq_spec(), "example1");
}

double degrees_to_radians(double degrees) {
  return degrees * std::numbers::pi / 180.0;
}

HomingMissileParams::HomingMissileParams()
    : target_azimuth(degrees_to_radians(30.0)),
      terminal_weights((Vector(3) << 1e-2, 2e-2, 0.0).finished()),
      x0((Vector(3) << 10000.0, 5000.0, 0.0).finished()) {}

OcpProblem example2_problem(const HomingMissileParams& hp) {
  if (hp.terminal_weights.size() != 3 || hp.x0.size() != 3) {
    throw std::invalid_argument("homing missile problem has three states");
  }
  if (!(hp.missile_speed > 0.0)) {
    throw std::invalid_argument("missile speed must be positive");
  }
  OcpProblem p;
  p.name = "example2";
  p.state_dim = 3;
  p.control_dim = 1;
  p.t0 = 0.0;
  p.tf = hp.tf_guess;
  p.terminal_mode = TerminalMode::kFree;
  p.x0 = hp.x0;

  const double vm = hp.missile_speed;
  const double vt = hp.target_speed;
  const double theta_t = hp.target_azimuth;
  const double r = hp.control_weight;
  const Matrix F = hp.terminal_weights.asDiagonal();

  p.f = [=](const Vector& x, const Vector& u, double) {
    Vector dx(3);
    dx << vt * std::sin(theta_t) - vm * std::sin(x(2)),
        vt * std::cos(theta_t) - vm * std::cos(x(2)), u(0) / vm;
    return dx;
  };
  p.L = [r](const Vector&, const Vector& u, double) {
    return 0.5 * r * u(0) * u(0);
  };
  p.phi = [F](const Vector& x, double) { return 0.5 * x.dot(F * x); };
  p.f_x = [vm](const Vector& x, const Vector&, double) {
    Matrix a = Matrix::Zero(3, 3);
    a(0, 2) = -vm * std::cos(x(2));
    a(1, 2) = vm * std::sin(x(2));
    return a;
  };
  p.f_u = [vm](const Vector&, const Vector&, double) {
    return Matrix((Matrix(3, 1) << 0.0, 0.0, 1.0 / vm).finished());
  };
  p.L_x = [](const Vector&, const Vector&, double) {
    return Vector(Vector::Zero(3));
  };
  p.L_u = [r](const Vector&, const Vector& u, double) {
    return Vector(r * u);
  };
  p.phi_x = [F](const Vector& x, double) { return Vector(F * x); };
  p.phi_t = [](const Vector&, double) { return 0.0; };
  p.phi_xx = [F](const Vector&, double) { return F; };
  p.phi_tx = [](const Vector&, double) { return Vector(Vector::Zero(3)); };
  return p;
}

ScalingSpec example2_default_scaling() {
  ScalingSpec s;
  s.state_scales = (Vector(3) << 1e4, 1e4, 1.0).finished();
  s.control_scales = Vector::Constant(1, 1e2);
  s.time_scale = 1.0;
  return s;
}

}  // namespace vem
