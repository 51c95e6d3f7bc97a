#pragma once

#include <algorithm>
#include <cmath>
#include <mutex>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "bhps/core.hpp"
#include "bhps/integrator.hpp"
#include "bhps/meanfield.hpp"
#include "bhps/parallel.hpp"
#include "bhps/phase_point.hpp"

namespace bhps {

// ---------------------------------------------------------------------------------------------
// Three-mode Poincare section at q1 = 0 with dq1/dt > 0.

struct SectionRecord {
  double t{0.0};
  double p3{0.0};
  double q3{0.0};
  double p1{0.0};
  double energy{0.0};
  bool two_roots{false};  // the energy shell has two p1 solutions at this (p3, q3)
  std::size_t trajectory{0};
};

struct SectionData {
  double energy{0.0};
  std::vector<SectionRecord> records;
  std::size_t discarded_larger_branch{0};
  bool smaller_root_rule{true};
};

struct SectionOptions {
  double t_max{200.0};
  double energy_tol{1e-6};
  double rtol{1e-10};
  double atol{1e-12};
  double crossing_tol{1e-8};
  int root_scan{400};
  std::size_t max_records{0};  // 0: unbounded
};

/// Solutions p1 in [0, 1 - p3] of H(p1; p3, q1 = 0, q3) = energy, ascending.
inline std::vector<double> section_p1_roots(const ClassicalSpec& s, double energy, double p3, double q3, int scan = 400) {
  std::vector<double> roots;
  const double top = 1.0 - p3;
  if (top < 0.0) return roots;
  auto f = [&](double p1) { return classical_energy_3(s, {p1, p3, 0.0, q3}) - energy; };
  double x0 = 0.0, f0 = f(0.0);
  if (f0 == 0.0) roots.push_back(0.0);
  for (int k = 1; k <= scan; ++k) {
    const double x1 = top * k / scan;
    const double f1 = f(x1);
    if (f1 == 0.0) {
      roots.push_back(x1);
    } else if (f0 != 0.0 && (f0 < 0) != (f1 < 0)) {
      double a = x0, b = x1, fa = f0;
      for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if ((fm < 0) == (fa < 0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    x0 = x1;
    f0 = f1;
  }
  return roots;
}

/// Point on the section plane (q1 = 0) at the given energy on the smaller-p1 branch.
inline std::optional<PhasePoint> section_point(const ClassicalSpec& s, double energy, double p3, double q3) {
  if (p3 < 0.0 || p3 > 1.0) return std::nullopt;
  const auto roots = section_p1_roots(s, energy, p3, q3);
  if (roots.empty()) return std::nullopt;
  return PhasePoint::from_coords3({roots.front(), p3, 0.0, q3});
}

namespace detail {

inline double section_phase(const Amplitudes& y) { return std::arg(std::conj(y[0]) * y[1]); }  // = q1 in (-pi, pi]

inline double section_phase_rate(const ClassicalSpec& s, double t, const Amplitudes& y) {
  Amplitudes d;
  gpe_amplitude_rhs(s, t, y, d);
  const cplx c = std::conj(y[0]) * y[1];
  const cplx dc = std::conj(d[0]) * y[1] + std::conj(y[0]) * d[1];
  return (dc / c).imag();
}

}  // namespace detail

/// Integrates each initial condition up to t_max and records upward crossings of q1 = 0.
///
/// Crossings are bracketed between accepted steps, located on the step's Hermite interpolant
/// by bisection and then refined by Newton iterations that re-integrate from the step start,
/// until |q1| <= crossing_tol. Records whose p1 sits on the larger of two energy roots are
/// discarded (and counted) so each (p3, q3) is shown once.
inline SectionData poincare_section_3mode(const ClassicalSpec& s, const std::vector<PhasePoint>& starts, double energy,
                                          const SectionOptions& opt = {}, int workers = 1) {
  s.validate();
  require(s.modes == 3 && s.autonomous(), "poincare_section_3mode: requires an autonomous three-mode model");
  for (const auto& st : starts) {
    require(st.modes == 3, "poincare_section_3mode: start points must be three-mode");
    const double e = classical_energy(s, st);
    require(std::abs(e - energy) <= opt.energy_tol,
            "poincare_section_3mode: initial condition off the energy shell (H = " + std::to_string(e) + ")");
  }
  StepControl ctl;
  ctl.rtol = opt.rtol;
  ctl.atol = opt.atol;
  std::vector<std::vector<SectionRecord>> per(starts.size());
  std::vector<std::size_t> discarded(starts.size(), 0);
  parallel_for(starts.size(), workers, [&](std::size_t idx) {
    Amplitudes psi = to_amplitudes(starts[idx]);
    auto refine = [&](double t0, const Amplitudes& y0, double tguess) {
      double tc = tguess;
      Amplitudes yc = y0;
      for (int it = 0; it < 30; ++it) {
        yc = y0;
        if (tc > t0) integrate_amplitudes(s, yc, t0, {tc}, ctl, [](std::size_t, double, const Amplitudes&) {});
        const double ph = detail::section_phase(yc);
        if (std::abs(ph) <= opt.crossing_tol) break;
        tc -= ph / detail::section_phase_rate(s, tc, yc);
      }
      return std::make_pair(tc, yc);
    };
    auto on_step = [&](const StepView<Amplitudes>& v) {
      const cplx c0 = std::conj(v.y0[0]) * v.y0[1];
      const cplx c1 = std::conj(v.y1[0]) * v.y1[1];
      if (!(c0.imag() < 0.0 && c1.imag() >= 0.0 && c1.real() > 0.0 && c0.real() > 0.0)) return true;
      double a = v.t0, b = v.t1;
      for (int it = 0; it < 60; ++it) {
        const double m = 0.5 * (a + b);
        const Amplitudes ym = v.interpolate(m);
        if ((std::conj(ym[0]) * ym[1]).imag() < 0.0) a = m;
        else b = m;
      }
      auto [tc, yc] = refine(v.t0, v.y0, 0.5 * (a + b));
      if (detail::section_phase_rate(s, tc, yc) <= 0.0) return true;
      const PhasePoint pt = from_amplitudes(yc, 3);
      const Coords3 c = pt.coords3();
      const auto roots = section_p1_roots(s, energy, c.p3, c.q3, opt.root_scan);
      SectionRecord r;
      r.t = tc;
      r.p3 = c.p3;
      r.q3 = c.q3;
      r.p1 = c.p1;
      r.energy = classical_energy(s, pt);
      r.trajectory = idx;
      r.two_roots = roots.size() >= 2;
      if (r.two_roots && std::abs(c.p1 - roots.back()) < std::abs(c.p1 - roots.front())) {
        ++discarded[idx];
      } else {
        per[idx].push_back(r);
      }
      return opt.max_records == 0 || per[idx].size() < opt.max_records;
    };
    integrate_amplitudes(s, psi, 0.0, {opt.t_max}, ctl, [](std::size_t, double, const Amplitudes&) {}, on_step);
  });
  SectionData out;
  out.energy = energy;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    out.records.insert(out.records.end(), per[i].begin(), per[i].end());
    out.discarded_larger_branch += discarded[i];
  }
  return out;
}

/// First return of a section point to the section (smaller-p1 branch only).
inline std::optional<std::pair<double, double>> section_return(const ClassicalSpec& s, double energy, double p3, double q3,
                                                                const SectionOptions& base = {}) {
  const auto start = section_point(s, energy, p3, q3);
  if (!start) return std::nullopt;
  SectionOptions opt = base;
  opt.max_records = 1;
  opt.energy_tol = std::max(opt.energy_tol, 1e-9);
  const SectionData d = poincare_section_3mode(s, {*start}, energy, opt);
  if (d.records.empty()) return std::nullopt;
  return std::make_pair(d.records.front().p3, d.records.front().q3);
}

struct SectionFixedPoint {
  double p3{0.0};
  double q3{0.0};
  double residual{0.0};
  double trace{0.0};  // trace of the return-map Jacobian; |trace| < 2 means elliptic
  bool converged{false};
};

/// Newton iteration for a fixed point of the section return map, Jacobian by central differences.
inline SectionFixedPoint find_section_fixed_point(const ClassicalSpec& s, double energy, double p3, double q3,
                                                  const SectionOptions& opt = {}, int max_iter = 20) {
  SectionFixedPoint out;
  auto residual = [&](double a, double b) -> std::optional<std::pair<double, double>> {
    const auto r = section_return(s, energy, a, b, opt);
    if (!r) return std::nullopt;
    return std::make_pair(r->first - a, wrap_signed(r->second - b));
  };
  const double h = 1e-6;
  for (int it = 0; it < max_iter; ++it) {
    const auto f = residual(p3, q3);
    if (!f) return out;
    out.residual = std::hypot(f->first, f->second);
    const auto fpa = residual(p3 + h, q3), fma = residual(p3 - h, q3);
    const auto fpb = residual(p3, q3 + h), fmb = residual(p3, q3 - h);
    if (!fpa || !fma || !fpb || !fmb) return out;
    const double j11 = (fpa->first - fma->first) / (2 * h), j12 = (fpb->first - fmb->first) / (2 * h);
    const double j21 = (fpa->second - fma->second) / (2 * h), j22 = (fpb->second - fmb->second) / (2 * h);
    out.trace = (j11 + 1.0) + (j22 + 1.0);
    out.p3 = p3;
    out.q3 = q3;
    if (out.residual < 1e-9) {
      out.converged = true;
      return out;
    }
    const double det = j11 * j22 - j12 * j21;
    if (det == 0.0) return out;
    double dp = -(j22 * f->first - j12 * f->second) / det;
    double dq = -(-j21 * f->first + j11 * f->second) / det;
    const double len = std::hypot(dp, dq);
    if (len > 0.05) {
      dp *= 0.05 / len;
      dq *= 0.05 / len;
    }
    p3 += dp;
    q3 = wrap_signed(q3 + dq);
  }
  out.p3 = p3;
  out.q3 = q3;
  return out;
}

// ---------------------------------------------------------------------------------------------
// Stroboscopic map of the driven dimer.

/// For each start point, (p, q) at t = k T for k = 0..n_periods.
inline std::vector<std::vector<std::pair<double, double>>> stroboscopic_map(const ClassicalSpec& s, const std::vector<PhasePoint>& starts,
                                                                            int n_periods, int workers = 1, double rtol = 1e-10,
                                                                            double atol = 1e-12) {
  s.validate();
  require(s.modes == 2 && s.drive.has_value() && s.drive->omega > 0.0, "stroboscopic_map: requires a driven two-mode model");
  require(s.drive->delta1 >= 0.0, "stroboscopic_map: delta1 must be >= 0");
  require(n_periods >= 0, "stroboscopic_map: n_periods must be >= 0");
  const double period = s.drive->period();
  std::vector<double> times(static_cast<std::size_t>(n_periods) + 1);
  for (int k = 0; k <= n_periods; ++k) times[static_cast<std::size_t>(k)] = k * period;
  std::vector<std::vector<std::pair<double, double>>> out(starts.size());
  parallel_for(starts.size(), workers, [&](std::size_t i) {
    TrajectoryConfig tc;
    tc.sample_times = times;
    tc.rtol = rtol;
    tc.atol = atol;
    const Trajectory tr = integrate_trajectory(s, starts[i], tc);
    for (const auto& pt : tr.points) out[i].emplace_back(pt.p(), pt.q());
  });
  return out;
}

/// Newton search for a fixed point of the k-period stroboscopic map, starting from (p, q).
inline std::optional<std::pair<double, double>> find_periodic_point(const ClassicalSpec& s, double p, double q, int periods,
                                                                    int max_iter = 30) {
  auto map = [&](double a, double b) {
    const auto r = stroboscopic_map(s, {PhasePoint::from_pq(std::clamp(a, 0.0, 1.0), b)}, periods);
    return r[0].back();
  };
  const double h = 1e-7;
  for (int it = 0; it < max_iter; ++it) {
    const auto f0 = map(p, q);
    const double r1 = f0.first - p, r2 = wrap_signed(f0.second - q);
    if (std::hypot(r1, r2) < 1e-10) return std::make_pair(p, wrap_angle(q));
    const auto fa = map(p + h, q), fb = map(p, q + h);
    const double j11 = (fa.first - (p + h) - r1) / h, j21 = (wrap_signed(fa.second - q) - r2) / h;
    const double j12 = (fb.first - p - r1) / h, j22 = (wrap_signed(fb.second - (q + h)) - r2) / h;
    const double det = j11 * j22 - j12 * j21;
    if (det == 0.0 || !std::isfinite(det)) return std::nullopt;
    double dp = -(j22 * r1 - j12 * r2) / det, dq = -(-j21 * r1 + j11 * r2) / det;
    const double len = std::hypot(dp, dq);
    if (len > 0.05) {
      dp *= 0.05 / len;
      dq *= 0.05 / len;
    }
    p += dp;
    q += dq;
    if (p <= 0.0 || p >= 1.0) return std::nullopt;
  }
  return std::nullopt;
}

/// Number of occupied cells of an n x n box grid over (p, q) in [0,1] x [0, 2 pi).
inline std::size_t box_count(const std::vector<std::pair<double, double>>& pts, int n) {
  std::set<std::pair<int, int>> cells;
  for (const auto& [p, q] : pts) {
    const int i = std::clamp(static_cast<int>(p * n), 0, n - 1);
    const int j = std::clamp(static_cast<int>(wrap_angle(q) / kTwoPi * n), 0, n - 1);
    cells.insert({i, j});
  }
  return cells.size();
}

// ---------------------------------------------------------------------------------------------
// Power spectrum.

struct PowerSpectrum {
  std::vector<double> frequency;  // cycles per time unit
  std::vector<double> power;      // one-sided, sums to sum_n x_n^2 (window applied)
};

/// One-sided periodogram |X_k|^2 / L (doubled for interior bins) so that the sum of the
/// returned power equals the sum of squares of the (optionally Hann-windowed) samples.
inline PowerSpectrum power_spectrum(const std::vector<double>& times, const std::vector<double>& values, bool hann = false) {
  const std::size_t n = values.size();
  require(n >= 2, "power_spectrum: need at least two samples");
  require(times.size() == n, "power_spectrum: times and values differ in length");
  const double dt = (times.back() - times.front()) / static_cast<double>(n - 1);
  require(dt > 0.0, "power_spectrum: time grid must increase");
  for (std::size_t k = 1; k < n; ++k)
    require(std::abs(times[k] - times[k - 1] - dt) <= 1e-9 * std::max(1.0, std::abs(dt)), "power_spectrum: time grid is not uniform");
  std::vector<double> x(values);
  if (hann)
    for (std::size_t k = 0; k < n; ++k) x[k] *= 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(k) / static_cast<double>(n)));
  const std::size_t nc = n / 2 + 1;
  std::vector<fftw_complex> out(nc);
  {
    // FFTW planning is not thread safe; planning with FFTW_ESTIMATE under a lock.
    static std::mutex planner;
    std::lock_guard<std::mutex> lock(planner);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), x.data(), out.data(), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  PowerSpectrum ps;
  ps.frequency.resize(nc);
  ps.power.resize(nc);
  for (std::size_t k = 0; k < nc; ++k) {
    const double mag2 = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    const bool edge = (k == 0) || (n % 2 == 0 && k == n / 2);
    ps.power[k] = (edge ? 1.0 : 2.0) * mag2 / static_cast<double>(n);
    ps.frequency[k] = static_cast<double>(k) / (static_cast<double>(n) * dt);
  }
  return ps;
}

}  // namespace bhps
