#include "vem/ocp_model.hpp"

#include <cmath>
#include <limits>
#include <type_traits>
#include <stdexcept>

namespace vem {
namespace {

const double kSqrtEps = std::sqrt(std::numeric_limits<double>::epsilon());
const double kQuarticRootEps =
    std::sqrt(std::sqrt(std::numeric_limits<double>::epsilon()));

double step_for(double value, double base) {
  return base * (1.0 + std::abs(value));
}

// Central difference of a vector-valued map v -> g(v), one column per
// perturbed component.
template <typename Fn>
Matrix jacobian_fd(const Fn& g, const Vector& v, double base) {
  const Vector g0 = g(v);
  Matrix jac(g0.size(), v.size());
  Vector probe = v;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const double h = step_for(v(k), base);
    probe(k) = v(k) + h;
    const Vector plus = g(probe);
    probe(k) = v(k) - h;
    const Vector minus = g(probe);
    probe(k) = v(k);
    jac.col(k) = (plus - minus) / (2.0 * h);
  }
  return jac;
}

template <typename Fn>
Vector gradient_fd(const Fn& g, const Vector& v, double base) {
  Vector grad(v.size());
  Vector probe = v;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const double h = step_for(v(k), base);
    probe(k) = v(k) + h;
    const double plus = g(probe);
    probe(k) = v(k) - h;
    const double minus = g(probe);
    probe(k) = v(k);
    grad(k) = (plus - minus) / (2.0 * h);
  }
  return grad;
}

template <typename Fn>
auto derivative_fd(const Fn& g, double t, double base) {
  using Result = std::decay_t<decltype(g(t))>;
  const double h = step_for(t, base);
  const Result plus = g(t + h);
  const Result minus = g(t - h);
  return Result((plus - minus) / (2.0 * h));
}

double relative_error(const Matrix& analytic, const Matrix& fd) {
  if (analytic.rows() != fd.rows() || analytic.cols() != fd.cols()) {
    return std::numeric_limits<double>::infinity();
  }
  if (fd.size() == 0) return 0.0;
  const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
  return (analytic - fd).cwiseAbs().maxCoeff() / scale;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

void validate_problem(const OcpProblem& p) {
  if (p.state_dim < 1) throw std::invalid_argument("state_dim must be >= 1");
  if (p.control_dim < 1) {
    throw std::invalid_argument("control_dim must be >= 1");
  }
  if (p.x0.size() != p.state_dim) {
    throw std::invalid_argument("x0 size does not match state_dim");
  }
  if (!(p.tf > p.t0)) throw std::invalid_argument("tf must exceed t0");
  if (!p.f || !p.L || !p.phi) {
    throw std::invalid_argument("problem '" + p.name +
                                "' is missing f, L or phi");
  }
  if (!p.f_x || !p.f_u || !p.L_x || !p.L_u || !p.phi_x || !p.phi_t ||
      !p.phi_xx || !p.phi_tx) {
    throw std::invalid_argument(
        "problem '" + p.name +
        "' is missing partial evaluators; use with_finite_difference_fallback");
  }
}

OcpProblem with_finite_difference_fallback(OcpProblem p) {
  // Copies of the base evaluators keep the fallbacks self-contained.
  const auto f = p.f;
  const auto L = p.L;
  const auto phi = p.phi;
  const bool analytic_gradient = static_cast<bool>(p.phi_x);
  if (!p.f_x) {
    p.f_x = [f](const Vector& x, const Vector& u, double t) {
      return jacobian_fd([&](const Vector& v) { return f(v, u, t); }, x,
                         kSqrtEps);
    };
  }
  if (!p.f_u) {
    p.f_u = [f](const Vector& x, const Vector& u, double t) {
      return jacobian_fd([&](const Vector& v) { return f(x, v, t); }, u,
                         kSqrtEps);
    };
  }
  if (!p.L_x) {
    p.L_x = [L](const Vector& x, const Vector& u, double t) {
      return gradient_fd([&](const Vector& v) { return L(v, u, t); }, x,
                         kSqrtEps);
    };
  }
  if (!p.L_u) {
    p.L_u = [L](const Vector& x, const Vector& u, double t) {
      return gradient_fd([&](const Vector& v) { return L(x, v, t); }, u,
                         kSqrtEps);
    };
  }
  if (!p.phi_x) {
    p.phi_x = [phi](const Vector& x, double t) {
      return gradient_fd([&](const Vector& v) { return phi(v, t); }, x,
                         kSqrtEps);
    };
  }
  if (!p.phi_t) {
    p.phi_t = [phi](const Vector& x, double t) {
      return derivative_fd([&](double s) { return phi(x, s); }, t, kSqrtEps);
    };
  }
  // Second partials difference a first partial; the coarser step keeps the
  // nested rounding error near sqrt(eps).
  if (!p.phi_xx) {
    auto phi_x = p.phi_x;
    p.phi_xx = [phi_x, analytic_gradient](const Vector& x, double t) {
      Matrix hess = jacobian_fd([&](const Vector& v) { return phi_x(v, t); },
                                x, analytic_gradient ? kSqrtEps
                                                     : kQuarticRootEps);
      return Matrix(0.5 * (hess + hess.transpose()));
    };
  }
  if (!p.phi_tx) {
    auto phi_x = p.phi_x;
    const double base = analytic_gradient ? kSqrtEps : kQuarticRootEps;
    p.phi_tx = [phi_x, base](const Vector& x, double t) {
      return Vector(
          derivative_fd([&](double s) { return phi_x(x, s); }, t, base));
    };
  }
  return p;
}

bool DerivativeReport::ok() const {
  if (non_finite) return false;
  for (const auto& p : partials) {
    if (p.flagged) return false;
  }
  return true;
}

const PartialCheck& DerivativeReport::at(const std::string& partial) const {
  for (const auto& p : partials) {
    if (p.partial == partial) return p;
  }
  throw std::out_of_range("no derivative check named " + partial);
}

DerivativeReport check_derivatives(const OcpProblem& p,
                                   const std::vector<SamplePoint>& samples,
                                   double tolerance) {
  validate_problem(p);
  DerivativeReport report;
  const char* names[] = {"f_x",   "f_u",   "L_x",    "L_u",
                         "phi_x", "phi_t", "phi_xx", "phi_tx"};
  for (const char* name : names) report.partials.push_back({name});

  auto record = [&](int slot, int sample, const Matrix& analytic,
                    const Matrix& fd, const std::string& evaluator) {
    if (!all_finite(analytic) || !all_finite(fd)) {
      if (!report.non_finite) {
        report.non_finite = true;
        report.non_finite_sample = sample;
        report.non_finite_evaluator = evaluator;
      }
      return;
    }
    const double err = relative_error(analytic, fd);
    auto& entry = report.partials[slot];
    if (entry.worst_sample < 0 || err > entry.max_relative_error) {
      entry.max_relative_error = err;
      entry.worst_sample = sample;
    }
  };

  for (int s = 0; s < static_cast<int>(samples.size()); ++s) {
    const auto& [x, u, t] = samples[s];
    auto fx = [&](const Vector& v) { return p.f(v, u, t); };
    auto fu = [&](const Vector& v) { return p.f(x, v, t); };
    auto Lx = [&](const Vector& v) { return p.L(v, u, t); };
    auto Lu = [&](const Vector& v) { return p.L(x, v, t); };
    auto phix = [&](const Vector& v) { return p.phi(v, t); };
    auto phit = [&](double r) { return p.phi(x, r); };
    auto gradx = [&](const Vector& v) { return p.phi_x(v, t); };
    auto gradt = [&](double r) { return Vector(p.phi_x(x, r)); };

    record(0, s, p.f_x(x, u, t), jacobian_fd(fx, x, kSqrtEps), "f_x");
    record(1, s, p.f_u(x, u, t), jacobian_fd(fu, u, kSqrtEps), "f_u");
    record(2, s, p.L_x(x, u, t), gradient_fd(Lx, x, kSqrtEps), "L_x");
    record(3, s, p.L_u(x, u, t), gradient_fd(Lu, u, kSqrtEps), "L_u");
    record(4, s, p.phi_x(x, t), gradient_fd(phix, x, kSqrtEps), "phi_x");
    record(5, s, Matrix::Constant(1, 1, p.phi_t(x, t)),
           Matrix::Constant(1, 1, derivative_fd(phit, t, kSqrtEps)), "phi_t");
    record(6, s, p.phi_xx(x, t), jacobian_fd(gradx, x, kSqrtEps), "phi_xx");
    record(7, s, p.phi_tx(x, t), Vector(derivative_fd(gradt, t, kSqrtEps)),
           "phi_tx");
  }
  for (auto& entry : report.partials) {
    entry.flagged = entry.max_relative_error > tolerance;
  }
  return report;
}

ScalingSpec ScalingSpec::identity(int state_dim, int control_dim) {
  return {Vector::Ones(state_dim), Vector::Ones(control_dim), 1.0};
}

std::vector<std::string> scaling_violations(const ScalingSpec& spec,
                                            int state_dim, int control_dim) {
  std::vector<std::string> out;
  auto positive = [](const Vector& v) {
    return v.allFinite() && (v.array() > 0.0).all();
  };
  if (spec.state_scales.size() != state_dim) {
    out.push_back("state_scales must have " + std::to_string(state_dim) +
                  " entries");
  } else if (!positive(spec.state_scales)) {
    out.push_back("state_scales must be strictly positive and finite");
  }
  if (spec.control_scales.size() != control_dim) {
    out.push_back("control_scales must have " + std::to_string(control_dim) +
                  " entries");
  } else if (!positive(spec.control_scales)) {
    out.push_back("control_scales must be strictly positive and finite");
  }
  if (!std::isfinite(spec.time_scale) || !(spec.time_scale > 0.0)) {
    out.push_back("time_scale must be strictly positive and finite");
  }
  return out;
}

OcpProblem apply_scaling(const OcpProblem& p, const ScalingSpec& spec) {
  validate_problem(p);
  const auto violations = scaling_violations(spec, p.state_dim, p.control_dim);
  if (!violations.empty()) throw std::invalid_argument(violations.front());

  const Vector sx = spec.state_scales;
  const Vector su = spec.control_scales;
  const double T = spec.time_scale;
  const OcpProblem base = p;

  OcpProblem s = p;
  s.name = p.name + " (scaled)";
  s.t0 = p.t0 / T;
  s.tf = p.tf / T;
  s.x0 = p.x0.cwiseQuotient(sx);

  auto X = [sx](const Vector& xs) { return Vector(xs.cwiseProduct(sx)); };
  auto U = [su](const Vector& us) { return Vector(us.cwiseProduct(su)); };

  s.f = [=](const Vector& xs, const Vector& us, double ts) {
    return Vector(T * base.f(X(xs), U(us), T * ts).cwiseQuotient(sx));
  };
  s.L = [=](const Vector& xs, const Vector& us, double ts) {
    return T * base.L(X(xs), U(us), T * ts);
  };
  s.phi = [=](const Vector& xs, double ts) { return base.phi(X(xs), T * ts); };

  s.f_x = [=](const Vector& xs, const Vector& us, double ts) {
    return Matrix(T * sx.cwiseInverse().asDiagonal() *
                  base.f_x(X(xs), U(us), T * ts) * sx.asDiagonal());
  };
  s.f_u = [=](const Vector& xs, const Vector& us, double ts) {
    return Matrix(T * sx.cwiseInverse().asDiagonal() *
                  base.f_u(X(xs), U(us), T * ts) * su.asDiagonal());
  };
  s.L_x = [=](const Vector& xs, const Vector& us, double ts) {
    return Vector(T * base.L_x(X(xs), U(us), T * ts).cwiseProduct(sx));
  };
  s.L_u = [=](const Vector& xs, const Vector& us, double ts) {
    return Vector(T * base.L_u(X(xs), U(us), T * ts).cwiseProduct(su));
  };
  s.phi_x = [=](const Vector& xs, double ts) {
    return Vector(base.phi_x(X(xs), T * ts).cwiseProduct(sx));
  };
  s.phi_t = [=](const Vector& xs, double ts) {
    return T * base.phi_t(X(xs), T * ts);
  };
  s.phi_xx = [=](const Vector& xs, double ts) {
    return Matrix(sx.asDiagonal() * base.phi_xx(X(xs), T * ts) *
                  sx.asDiagonal());
  };
  s.phi_tx = [=](const Vector& xs, double ts) {
    return Vector(T * base.phi_tx(X(xs), T * ts).cwiseProduct(sx));
  };
  return s;
}

}  // namespace vem
