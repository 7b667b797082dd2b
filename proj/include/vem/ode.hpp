#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "vem/types.hpp"

namespace vem {

enum class StepperKind { kDormandPrince45, kRk4 };

struct OdeSettings {
  double rel_tol = 1e-3;
  double abs_tol = 1e-6;
  double initial_step = 0.0;  // 0: automatic
  double max_step = 0.0;      // 0: one tenth of the span
  long max_steps = 2'000'000;
  StepperKind stepper = StepperKind::kDormandPrince45;
  double fixed_step = 0.1;    // kRk4 only
  // Times the integrator lands on exactly (snapshot times).
  std::vector<double> stop_points;
};

enum class OdeStatus {
  kReachedEnd,
  kStoppedByObserver,
  kStepUnderflow,
  kNonFiniteState,
  kMaxStepsExceeded,
};

struct OdeOutcome {
  OdeStatus status = OdeStatus::kReachedEnd;
  double t = 0.0;
  long accepted = 0;
  long rejected = 0;
  long rhs_evaluations = 0;
};

namespace detail {

// Mixed absolute/relative error norm, max over components.
inline double error_norm(const Vector& err, const Vector& y0, const Vector& y1,
                         double atol, double rtol) {
  const auto scale =
      (atol + rtol * y0.cwiseAbs().cwiseMax(y1.cwiseAbs()).array()).eval();
  return (err.array().abs() / scale).maxCoeff();
}

struct DopriTableau {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                          c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113,
                          b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  // Difference between the fifth- and fourth-order weights.
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

/// Integrates dy/dt = rhs(t, y) from t0 towards t_end in place.
///
/// The default stepper is the Dormand-Prince 5(4) pair with PI step-size
/// control (beta = 0.04, safety 0.9, step ratio in [0.2, 10]). `observer`
/// is called as observer(t, y) at t0 and after every accepted step and
/// returns true to stop. Exceptions thrown by rhs or observer propagate.
template <typename Rhs, typename Observer>
OdeOutcome integrate_ode(Rhs&& rhs, Vector& y, double t0, double t_end,
                         const OdeSettings& settings, Observer&& observer) {
  using T = detail::DopriTableau;
  OdeOutcome out;
  out.t = t0;
  double t = t0;

  std::vector<double> stops;
  for (double s : settings.stop_points) {
    if (s > t0 && s < t_end) stops.push_back(s);
  }
  stops.push_back(t_end);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  std::size_t next_stop = 0;

  if (observer(t, std::as_const(y))) {
    out.status = OdeStatus::kStoppedByObserver;
    return out;
  }
  const double span = t_end - t0;
  if (!(span > 0.0)) return out;
  const double max_step =
      settings.max_step > 0.0 ? settings.max_step : 0.1 * span;

  auto eval = [&](double tt, const Vector& yy) {
    ++out.rhs_evaluations;
    return Vector(rhs(tt, yy));
  };

  if (settings.stepper == StepperKind::kRk4) {
    const double base = std::min(settings.fixed_step, max_step);
    while (t < t_end) {
      if (out.accepted >= settings.max_steps) {
        out.status = OdeStatus::kMaxStepsExceeded;
        break;
      }
      const double target = stops[next_stop];
      const bool lands = t + base >= target;
      const double h = lands ? target - t : base;
      const Vector k1 = eval(t, y);
      const Vector k2 = eval(t + 0.5 * h, y + 0.5 * h * k1);
      const Vector k3 = eval(t + 0.5 * h, y + 0.5 * h * k2);
      const Vector k4 = eval(t + h, y + h * k3);
      y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t = lands ? target : t + h;
      if (lands) ++next_stop;
      ++out.accepted;
      out.t = t;
      if (!y.allFinite()) {
        out.status = OdeStatus::kNonFiniteState;
        return out;
      }
      if (observer(t, std::as_const(y))) {
        out.status = OdeStatus::kStoppedByObserver;
        return out;
      }
    }
    return out;
  }

  const double rtol = settings.rel_tol;
  const double atol = settings.abs_tol;
  Vector k1 = eval(t, y);

  double h = settings.initial_step;
  if (!(h > 0.0)) {
    // Starting step heuristic of Hairer, Norsett and Wanner.
    const Vector scale =
        (atol + rtol * y.cwiseAbs().array()).matrix();
    const double d0 = (y.array() / scale.array()).abs().maxCoeff();
    const double d1 = (k1.array() / scale.array()).abs().maxCoeff();
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, max_step);
    const Vector f1 = eval(t + h0, y + h0 * k1);
    const double d2 =
        ((f1 - k1).array() / scale.array()).abs().maxCoeff() / h0;
    const double dmax = std::max(d1, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, 1e-3 * h0)
                                    : std::pow(0.01 / dmax, 0.2);
    h = std::min({100.0 * h0, h1, max_step});
  }

  constexpr double kBeta = 0.04;
  constexpr double kExpo = 0.2 - 0.75 * kBeta;
  constexpr double kSafety = 0.9;
  constexpr double kMinRatio = 0.2;
  constexpr double kMaxRatio = 10.0;
  double err_old = 1e-4;
  bool last_rejected = false;

  while (t < t_end) {
    if (out.accepted + out.rejected >= settings.max_steps) {
      out.status = OdeStatus::kMaxStepsExceeded;
      return out;
    }
    const double min_step =
        16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    if (h < min_step) {
      out.status = OdeStatus::kStepUnderflow;
      return out;
    }
    h = std::min(h, max_step);
    const double target = stops[next_stop];
    const bool lands = t + h >= target * (1.0 - 1e-14);
    const double step = lands ? target - t : h;

    const Vector k2 = eval(t + T::c2 * step, y + step * (T::a21 * k1));
    const Vector k3 =
        eval(t + T::c3 * step, y + step * (T::a31 * k1 + T::a32 * k2));
    const Vector k4 = eval(t + T::c4 * step,
                           y + step * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3));
    const Vector k5 =
        eval(t + T::c5 * step, y + step * (T::a51 * k1 + T::a52 * k2 +
                                           T::a53 * k3 + T::a54 * k4));
    const Vector k6 = eval(t + step, y + step * (T::a61 * k1 + T::a62 * k2 +
                                                 T::a63 * k3 + T::a64 * k4 +
                                                 T::a65 * k5));
    const Vector y_new = y + step * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 +
                                     T::b5 * k5 + T::b6 * k6);
    const Vector k7 = eval(t + step, y_new);
    const Vector err = step * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 +
                               T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
    double err_norm = detail::error_norm(err, y, y_new, atol, rtol);
    if (!std::isfinite(err_norm) || !y_new.allFinite()) {
      err_norm = std::numeric_limits<double>::infinity();
    }

    if (err_norm <= 1.0) {
      const double fac = std::clamp(
          std::pow(std::max(err_norm, 1e-300), kExpo) /
              std::pow(err_old, kBeta) / kSafety,
          1.0 / kMaxRatio, 1.0 / kMinRatio);
      double h_new = step / fac;
      if (lands) h_new = std::max(h_new, h);
      if (last_rejected) h_new = std::min(h_new, step);
      err_old = std::max(err_norm, 1e-4);
      last_rejected = false;

      y = y_new;
      k1 = k7;
      t = lands ? target : t + step;
      if (lands) ++next_stop;
      ++out.accepted;
      out.t = t;
      h = h_new;
      if (observer(t, std::as_const(y))) {
        out.status = OdeStatus::kStoppedByObserver;
        return out;
      }
    } else {
      ++out.rejected;
      last_rejected = true;
      const double shrink =
          std::isfinite(err_norm)
              ? std::min(1.0 / kMinRatio, std::pow(err_norm, kExpo) / kSafety)
              : 10.0;
      h = step / shrink;
    }
  }
  return out;
}

}  // namespace vem
