#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vem/types.hpp"

namespace vem {

enum class TerminalMode { kFixed, kFree };

/// Bolza-form optimal control problem
///
///   min  phi(x(tf), tf) + integral_{t0}^{tf} L(x, u, t) dt
///   s.t. dx/dt = f(x, u, t),  x(t0) = x0,  x(tf) free.
///
/// For a fixed terminal time `tf` is the horizon end; for a free terminal
/// time it is the nominal guess used to build the initial grid.
///
/// Every evaluator must be a pure function. Partial evaluators left empty
/// are filled by `with_finite_difference_fallback`.
struct OcpProblem {
  using VecFn = std::function<Vector(const Vector&, const Vector&, double)>;
  using MatFn = std::function<Matrix(const Vector&, const Vector&, double)>;
  using ScalarFn = std::function<double(const Vector&, const Vector&, double)>;
  using TerminalScalarFn = std::function<double(const Vector&, double)>;
  using TerminalVecFn = std::function<Vector(const Vector&, double)>;
  using TerminalMatFn = std::function<Matrix(const Vector&, double)>;

  std::string name;
  int state_dim = 0;
  int control_dim = 0;
  double t0 = 0.0;
  double tf = 1.0;
  TerminalMode terminal_mode = TerminalMode::kFixed;
  Vector x0;

  VecFn f;
  ScalarFn L;
  TerminalScalarFn phi;

  MatFn f_x;
  MatFn f_u;
  VecFn L_x;
  VecFn L_u;
  TerminalVecFn phi_x;
  TerminalScalarFn phi_t;
  TerminalMatFn phi_xx;
  TerminalVecFn phi_tx;

  bool free_terminal_time() const {
    return terminal_mode == TerminalMode::kFree;
  }
};

/// Throws std::invalid_argument if dimensions are inconsistent or a base
/// evaluator (f, L, phi) or partial is missing.
void validate_problem(const OcpProblem& problem);

/// Returns a copy in which every missing partial is backed by central
/// finite differences. First partials use h = sqrt(eps) * (1 + |v|); second
/// partials of phi use h = eps^(1/4) * (1 + |v|).
OcpProblem with_finite_difference_fallback(OcpProblem problem);

struct SamplePoint {
  Vector x;
  Vector u;
  double t = 0.0;
};

struct PartialCheck {
  std::string partial;
  double max_relative_error = 0.0;
  int worst_sample = -1;
  bool flagged = false;
};

struct DerivativeReport {
  std::vector<PartialCheck> partials;
  // Set when an evaluator produced a non-finite value.
  bool non_finite = false;
  int non_finite_sample = -1;
  std::string non_finite_evaluator;

  bool ok() const;
  const PartialCheck& at(const std::string& partial) const;
};

/// Compares each analytic partial with a central finite difference of the
/// corresponding base evaluator. phi_xx and phi_tx are differenced from the
/// analytic phi_x. The relative error of a partial at a point is
/// max|analytic - fd| / max(1, max|fd|).
DerivativeReport check_derivatives(const OcpProblem& problem,
                                   const std::vector<SamplePoint>& samples,
                                   double tolerance = 1e-4);

struct ScalingSpec {
  Vector state_scales;
  Vector control_scales;
  double time_scale = 1.0;

  static ScalingSpec identity(int state_dim, int control_dim);
};

/// Empty on success, otherwise one message per violated invariant.
std::vector<std::string> scaling_violations(const ScalingSpec& spec,
                                            int state_dim, int control_dim);

/// Problem in the variables xs = x / state_scales, us = u / control_scales,
/// ts = t / time_scale. The performance index is preserved exactly.
OcpProblem apply_scaling(const OcpProblem& problem, const ScalingSpec& spec);

}  // namespace vem
