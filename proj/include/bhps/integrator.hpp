#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "bhps/core.hpp"

namespace bhps {

struct StepControl {
  double rtol{1e-9};
  double atol{1e-9};
  double max_step{std::numeric_limits<double>::infinity()};
  double initial_step{0.0};  // 0 selects automatically
  long max_steps{50'000'000};
};

struct IntegratorStats {
  long accepted{0};
  long rejected{0};
  long rhs_evaluations{0};
  double last_step{0.0};
};

/// Accepted-step data handed to step observers: endpoints and derivatives.
template <class State>
struct StepView {
  double t0, t1;
  const State& y0;
  const State& f0;
  const State& y1;
  const State& f1;

  /// Cubic Hermite interpolant at t in [t0, t1].
  State interpolate(double t) const {
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    return State(h00 * y0 + (h10 * h) * f0 + h01 * y1 + (h11 * h) * f1);
  }
};

struct NoStepObserver {
  template <class V>
  bool operator()(const V&) const { return true; }
};

struct NoProjection {
  template <class S>
  void operator()(S&) const {}
};

namespace detail {

template <class State>
double error_ratio(const State& err, const State& y0, const State& y1, double atol, double rtol) {
  auto scale = atol + rtol * y0.array().abs().max(y1.array().abs());
  return (err.array().abs() / scale).maxCoeff();
}

template <class State>
double scaled_norm(const State& v, const State& y0, double atol, double rtol) {
  auto scale = atol + rtol * y0.array().abs();
  return (v.array().abs() / scale).maxCoeff();
}

}  // namespace detail

/// Dormand-Prince 5(4) integrator over Eigen dense states.
///
/// Steps are clipped so that every entry of `samples` is hit exactly; `on_sample(k, t, y)`
/// fires for each sample in order. `on_step(StepView)` sees every accepted step and may return
/// false to stop early. `project(y)` is applied after each accepted step (e.g. renormalization).
template <class State, class Rhs, class OnSample, class OnStep = NoStepObserver, class Project = NoProjection>
IntegratorStats integrate_dopri5(Rhs&& rhs, State& y, double t0, const std::vector<double>& samples,
                                 const StepControl& ctl, OnSample&& on_sample, OnStep&& on_step = {},
                                 Project&& project = {}) {
  require(ctl.rtol > 0 && ctl.atol > 0, "integrate: tolerances must be positive");
  require(ctl.max_step > 0, "integrate: max_step must be positive");
  for (std::size_t k = 0; k < samples.size(); ++k) {
    require(samples[k] >= t0, "integrate: sample time before start");
    if (k > 0) require(samples[k] >= samples[k - 1], "integrate: sample times must be sorted");
  }
  IntegratorStats stats;
  if (samples.empty()) return stats;

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                          a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  double t = t0;
  std::size_t next = 0;
  while (next < samples.size() && samples[next] == t) {
    on_sample(next, t, static_cast<const State&>(y));
    ++next;
  }
  if (next == samples.size()) return stats;

  State k1, k2, k3, k4, k5, k6, k7, tmp, ynew, err;
  rhs(t, y, k1);
  ++stats.rhs_evaluations;

  double h = ctl.initial_step;
  if (h <= 0.0) {
    // Hairer-Norsett-Wanner starting step heuristic.
    const double d0 = detail::scaled_norm(y, y, ctl.atol, ctl.rtol);
    const double d1 = detail::scaled_norm(k1, y, ctl.atol, ctl.rtol);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, samples.back() - t);
    tmp = y + h0 * k1;
    rhs(t + h0, tmp, k2);
    ++stats.rhs_evaluations;
    const double d2 = detail::scaled_norm(State(k2 - k1), y, ctl.atol, ctl.rtol) / h0;
    const double h1 = (std::max(d1, d2) <= 1e-15) ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / std::max(d1, d2), 0.2);
    h = std::min(100 * h0, h1);
  }
  h = std::min(h, ctl.max_step);

  while (next < samples.size()) {
    if (stats.accepted + stats.rejected >= ctl.max_steps)
      throw NumericalError("integrate: step budget exhausted at t=" + std::to_string(t));
    const double target = samples[next];
    bool hits_sample = false;
    double hs = h;
    if (t + hs >= target || target - (t + hs) < 1e-12 * std::max(1.0, std::abs(target))) {
      hs = target - t;
      hits_sample = true;
    }
    if (!(hs > 1e-14 * std::max(1.0, std::abs(t))))
      throw NumericalError("integrate: step size collapsed at t=" + std::to_string(t));

    tmp = y + hs * (a21 * k1);
    rhs(t + c2 * hs, tmp, k2);
    tmp = y + hs * (a31 * k1 + a32 * k2);
    rhs(t + c3 * hs, tmp, k3);
    tmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * hs, tmp, k4);
    tmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * hs, tmp, k5);
    tmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + hs, tmp, k6);
    ynew = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const double tnew = hits_sample ? target : t + hs;
    rhs(tnew, ynew, k7);
    stats.rhs_evaluations += 6;
    err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double ratio = detail::error_ratio(err, y, ynew, ctl.atol, ctl.rtol);
    if (!std::isfinite(ratio)) {
      ++stats.rejected;
      h = 0.1 * hs;
      continue;
    }
    const double fac = ratio == 0.0 ? 10.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 10.0);
    if (ratio > 1.0) {
      ++stats.rejected;
      h = hs * std::min(1.0, fac);
      continue;
    }
    ++stats.accepted;
    project(ynew);
    bool projected = !std::is_same_v<std::decay_t<Project>, NoProjection>;
    if (projected) {
      rhs(tnew, ynew, k7);
      ++stats.rhs_evaluations;
    }
    const bool keep_going = on_step(StepView<State>{t, tnew, y, k1, ynew, k7});
    t = tnew;
    y.swap(ynew);
    k1.swap(k7);
    stats.last_step = hs;
    if (hits_sample) {
      while (next < samples.size() && samples[next] == t) {
        on_sample(next, t, static_cast<const State&>(y));
        ++next;
      }
      // keep the proposed step from the controller unless the clip shortened it
      h = std::max(h, hs * fac);
    } else {
      h = hs * fac;
    }
    h = std::min(h, ctl.max_step);
    if (!keep_going) break;
  }
  return stats;
}

}  // namespace bhps
