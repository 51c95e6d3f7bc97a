#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bhps/core.hpp"
#include "bhps/integrator.hpp"
#include "bhps/model.hpp"
#include "bhps/phase_point.hpp"
#include "bhps/rng.hpp"
#include "bhps/series.hpp"

namespace bhps {

/// Operator ordering that fixes the macroscopic coupling: Q gives g = U N, P gives g = U (N+2).
enum class Ordering { Q, P };

inline std::string to_string(Ordering o) { return o == Ordering::Q ? "Q" : "P"; }

inline Ordering ordering_from_string(const std::string& s) {
  if (s == "Q" || s == "q") return Ordering::Q;
  if (s == "P" || s == "p") return Ordering::P;
  throw InvalidArgument("unknown ordering '" + s + "' (expected Q or P)");
}

/// Mean-field parameters; mirrors ModelSpec with the macroscopic coupling g.
struct ClassicalSpec {
  int modes{2};
  double g{0.0};
  Ordering ordering{Ordering::Q};
  double delta{1.0};
  double delta23{1.0};
  double eps{0.0};
  std::array<double, 3> onsite{0.0, 0.0, 0.0};
  std::optional<Drive> drive;
  double gamma1{0.0};

  static ClassicalSpec from_model(const ModelSpec& m, Ordering ord = Ordering::Q) {
    m.validate();
    ClassicalSpec c;
    c.modes = m.modes;
    c.ordering = ord;
    c.g = m.u * (ord == Ordering::Q ? m.particles : m.particles + 2.0);
    c.delta = m.delta;
    c.delta23 = m.delta23;
    c.eps = m.eps;
    c.onsite = m.onsite;
    c.drive = m.drive;
    c.gamma1 = m.gamma1;
    return c;
  }

  void validate() const {
    require(modes == 2 || modes == 3, "ClassicalSpec: modes must be 2 or 3");
    auto finite = [](double x) { return std::isfinite(x); };
    require(finite(g) && finite(delta) && finite(delta23) && finite(eps) && finite(gamma1), "ClassicalSpec: non-finite parameter");
    for (double e : onsite) require(finite(e), "ClassicalSpec: non-finite onsite energy");
    require(gamma1 >= 0.0, "ClassicalSpec: gamma1 must be >= 0");
    if (drive) {
      require(modes == 2, "ClassicalSpec: drive is only supported for two modes");
      require(drive->delta1 == 0.0 || drive->omega > 0.0, "ClassicalSpec: omega must be > 0 when delta1 != 0");
    }
  }

  bool autonomous() const { return !(drive && drive->delta1 != 0.0); }
  double tunneling(double t) const { return drive ? drive->delta0 + drive->delta1 * std::cos(drive->omega * t) : delta; }
  std::array<double, 3> onsite_energies() const {
    if (modes == 2) return {-0.5 * eps, 0.5 * eps, 0.0};
    return onsite;
  }
};

/// Mean-field energy per particle.
///
/// Two modes: eps p - 2 Delta sqrt(p(1-p)) cos q + g/4 (1-2p)^2.
/// Three modes: sum_j eps_j p_j + g/2 sum_j p_j^2 - 2 Delta12 sqrt(p1 p2) cos q1 - 2 Delta23 sqrt(p2 p3) cos q3.
inline double classical_energy(const ClassicalSpec& s, const PhasePoint& pt, double t = 0.0) {
  if (s.modes == 2) {
    const double p = pt.p();
    const cplx c = std::conj(pt.psi[0]) * pt.psi[1];  // sqrt(p(1-p)) e^{-iq}
    return s.eps * p - 2.0 * s.tunneling(t) * c.real() + 0.25 * s.g * (1.0 - 2.0 * p) * (1.0 - 2.0 * p);
  }
  const auto e = s.onsite_energies();
  double h = 0.0;
  for (int j = 0; j < 3; ++j) {
    const double pj = std::norm(pt.psi[j]);
    h += e[j] * pj + 0.5 * s.g * pj * pj;
  }
  h -= 2.0 * s.delta * (std::conj(pt.psi[0]) * pt.psi[1]).real();
  h -= 2.0 * s.delta23 * (std::conj(pt.psi[2]) * pt.psi[1]).real();
  return h;
}

inline double classical_energy_pq(const ClassicalSpec& s, double p, double q, double t = 0.0) {
  return s.eps * p - 2.0 * s.tunneling(t) * std::sqrt(std::max(0.0, p * (1.0 - p))) * std::cos(q) +
         0.25 * s.g * (1.0 - 2.0 * p) * (1.0 - 2.0 * p);
}

inline double classical_energy_3(const ClassicalSpec& s, const Coords3& c) {
  const double p2 = std::max(0.0, 1.0 - c.p1 - c.p3);
  return s.onsite[0] * c.p1 + s.onsite[1] * p2 + s.onsite[2] * c.p3 +
         0.5 * s.g * (c.p1 * c.p1 + p2 * p2 + c.p3 * c.p3) - 2.0 * s.delta * std::sqrt(c.p1 * p2) * std::cos(c.q1) -
         2.0 * s.delta23 * std::sqrt(p2 * c.p3) * std::cos(c.q3);
}

using Amplitudes = Eigen::Vector3cd;

inline Amplitudes to_amplitudes(const PhasePoint& pt) { return {pt.psi[0], pt.psi[1], pt.psi[2]}; }

inline PhasePoint from_amplitudes(const Amplitudes& a, int modes) {
  std::array<cplx, 3> psi{a[0], a[1], modes == 3 ? a[2] : cplx(0.0)};
  return PhasePoint::normalized(psi, modes);
}

/// Discrete GPE: i dpsi_j/dt = (eps_j + g |psi_j|^2) psi_j - sum_k Delta_jk psi_k.
inline void gpe_amplitude_rhs(const ClassicalSpec& s, double t, const Amplitudes& psi, Amplitudes& dpsi) {
  const auto e = s.onsite_energies();
  const double d12 = s.tunneling(t);
  if (s.modes == 2) {
    dpsi[0] = -kI * ((e[0] + s.g * std::norm(psi[0])) * psi[0] - d12 * psi[1]);
    dpsi[1] = -kI * ((e[1] + s.g * std::norm(psi[1])) * psi[1] - d12 * psi[0]);
    dpsi[2] = 0.0;
    return;
  }
  dpsi[0] = -kI * ((e[0] + s.g * std::norm(psi[0])) * psi[0] - d12 * psi[1]);
  dpsi[1] = -kI * ((e[1] + s.g * std::norm(psi[1])) * psi[1] - d12 * psi[0] - s.delta23 * psi[2]);
  dpsi[2] = -kI * ((e[2] + s.g * std::norm(psi[2])) * psi[2] - s.delta23 * psi[1]);
}

/// Canonical phase velocity. Two modes: (dp/dt, dq/dt). Three modes: (dp1, dp3, dq1, dq3).
///
/// The coordinate form is singular where a population vanishes; such points are rejected and
/// trajectories are integrated in amplitude form instead.
inline std::vector<double> gpe_rhs(const ClassicalSpec& s, const PhasePoint& pt, double t = 0.0) {
  constexpr double edge = 1e-14;
  if (s.modes == 2) {
    const double p = pt.p(), q = pt.q();
    require(p > edge && p < 1.0 - edge, "gpe_rhs: coordinate form is singular at p in {0, 1}");
    const double d = s.tunneling(t);
    const double r = std::sqrt(p * (1.0 - p));
    const double pdot = -2.0 * d * r * std::sin(q);
    const double qdot = s.eps - d * (1.0 - 2.0 * p) / r * std::cos(q) - s.g * (1.0 - 2.0 * p);
    return {pdot, qdot};
  }
  const Coords3 c = pt.coords3();
  const double p2 = 1.0 - c.p1 - c.p3;
  require(c.p1 > edge && c.p3 > edge && p2 > edge, "gpe_rhs: coordinate form is singular on the simplex boundary");
  const auto e = s.onsite_energies();
  const double d12 = s.delta, d23 = s.delta23;
  const double r12 = std::sqrt(c.p1 * p2), r23 = std::sqrt(p2 * c.p3);
  const double p1dot = -2.0 * d12 * r12 * std::sin(c.q1);
  const double p3dot = -2.0 * d23 * r23 * std::sin(c.q3);
  const double q1dot = e[0] - e[1] + s.g * (c.p1 - p2) - d12 * std::cos(c.q1) * (p2 - c.p1) / r12 +
                       d23 * std::cos(c.q3) * std::sqrt(c.p3 / p2);
  const double q3dot = e[2] - e[1] + s.g * (c.p3 - p2) - d23 * std::cos(c.q3) * (p2 - c.p3) / r23 +
                       d12 * std::cos(c.q1) * std::sqrt(c.p1 / p2);
  return {p1dot, p3dot, q1dot, q3dot};
}

/// Amplitude-form velocity mapped to canonical coordinates, for cross-checking gpe_rhs.
inline std::vector<double> gpe_rhs_from_amplitudes(const ClassicalSpec& s, const PhasePoint& pt, double t = 0.0) {
  Amplitudes psi = to_amplitudes(pt), d;
  gpe_amplitude_rhs(s, t, psi, d);
  auto arg_rate = [&](int j) { return (d[j] / psi[j]).imag(); };
  auto pop_rate = [&](int j) { return 2.0 * (std::conj(psi[j]) * d[j]).real(); };
  if (s.modes == 2) return {pop_rate(1), arg_rate(0) - arg_rate(1)};
  return {pop_rate(0), pop_rate(2), arg_rate(1) - arg_rate(0), arg_rate(1) - arg_rate(2)};
}

struct TrajectoryConfig {
  std::vector<double> sample_times;
  double rtol{1e-10};
  double atol{1e-12};
  double max_step{std::numeric_limits<double>::infinity()};

  StepControl control() const {
    StepControl c;
    c.rtol = rtol;
    c.atol = atol;
    c.max_step = max_step;
    return c;
  }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<PhasePoint> points;
  std::vector<double> energies;
  IntegratorStats stats;

  /// Columns t, p, q, energy (two modes) or t, p1, p3, q1, q3, energy (three modes).
  ObservableSeries to_series() const {
    const bool two = !points.empty() && points.front().modes == 2;
    ObservableSeries s(two ? std::vector<std::string>{"t", "p", "q", "energy"}
                           : std::vector<std::string>{"t", "p1", "p3", "q1", "q3", "energy"});
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (two) {
        s.add_row({times[k], points[k].p(), points[k].q(), energies[k]});
      } else {
        const Coords3 c = points[k].coords3();
        s.add_row({times[k], c.p1, c.p3, c.q1, c.q3, energies[k]});
      }
    }
    return s;
  }
};

struct Renormalize {
  void operator()(Amplitudes& a) const { a /= a.norm(); }
};

/// Low-level amplitude integration with access to accepted steps.
template <class OnSample, class OnStep = NoStepObserver>
IntegratorStats integrate_amplitudes(const ClassicalSpec& s, Amplitudes& psi, double t0, const std::vector<double>& samples,
                                     const StepControl& ctl, OnSample&& on_sample, OnStep&& on_step = {}) {
  auto rhs = [&](double t, const Amplitudes& y, Amplitudes& dy) { gpe_amplitude_rhs(s, t, y, dy); };
  return integrate_dopri5(rhs, psi, t0, samples, ctl, std::forward<OnSample>(on_sample), std::forward<OnStep>(on_step), Renormalize{});
}

inline Trajectory integrate_trajectory(const ClassicalSpec& s, const PhasePoint& start, const TrajectoryConfig& cfg) {
  s.validate();
  require(start.modes == s.modes, "integrate_trajectory: start point has wrong mode count");
  require(!cfg.sample_times.empty(), "integrate_trajectory: no sample times");
  Trajectory tr;
  Amplitudes psi = to_amplitudes(start);
  const double t0 = cfg.sample_times.front();
  tr.stats = integrate_amplitudes(s, psi, t0, cfg.sample_times, cfg.control(), [&](std::size_t, double t, const Amplitudes& y) {
    const PhasePoint pt = from_amplitudes(y, s.modes);
    tr.times.push_back(t);
    tr.points.push_back(pt);
    tr.energies.push_back(classical_energy(s, pt, t));
  });
  return tr;
}

enum class Stability { Elliptic, Hyperbolic };

inline std::string to_string(Stability s) { return s == Stability::Elliptic ? "elliptic" : "hyperbolic"; }

struct FixedPoint {
  double p{0.5};
  double q{0.0};
  Stability stability{Stability::Elliptic};
  double lambda2{0.0};  // squared linearization eigenvalue; < 0 elliptic, > 0 hyperbolic
};

/// Fixed points of the autonomous two-mode flow.
///
/// dp/dt = 0 forces sin q = 0, so all fixed points lie on q in {0, pi}. With z = 2p - 1 and
/// c = cos q the remaining condition is F(z) = eps + 2 Delta c z / sqrt(1 - z^2) + g z = 0,
/// whose squared form (eps + g z)^2 (1 - z^2) = 4 Delta^2 z^2 is a polynomial of degree <= 4.
inline std::vector<FixedPoint> find_fixed_points_2mode(const ClassicalSpec& s) {
  s.validate();
  require(s.modes == 2, "find_fixed_points_2mode: requires two modes");
  require(s.autonomous(), "find_fixed_points_2mode: requires an autonomous model");
  const double d = s.tunneling(0.0);
  require(d != 0.0, "find_fixed_points_2mode: Delta = 0 gives non-isolated fixed points");
  const double e = s.eps, g = s.g;
  // coefficients in increasing powers of z
  std::array<double, 5> a{e * e, 2.0 * e * g, g * g - e * e - 4.0 * d * d, -2.0 * e * g, -g * g};
  const double amax = std::max({std::abs(a[0]), std::abs(a[1]), std::abs(a[2]), std::abs(a[3]), std::abs(a[4])});
  int deg = 4;
  while (deg > 0 && std::abs(a[static_cast<std::size_t>(deg)]) <= 1e-14 * amax) --deg;
  std::vector<cplx> cand;
  int low = 0;
  while (low < deg && std::abs(a[static_cast<std::size_t>(low)]) <= 1e-14 * amax) {
    cand.emplace_back(0.0);
    ++low;
  }
  const int m = deg - low;
  if (m > 0) {
    CMatrix comp = CMatrix::Zero(m, m);
    for (int k = 0; k < m; ++k) comp(0, k) = -a[static_cast<std::size_t>(deg - 1 - k)] / a[static_cast<std::size_t>(deg)];
    for (int k = 1; k < m; ++k) comp(k, k - 1) = 1.0;
    Eigen::ComplexEigenSolver<CMatrix> es(comp, false);
    for (int k = 0; k < m; ++k) cand.push_back(es.eigenvalues()[k]);
  }
  auto f = [&](double z, double c) { return e + 2.0 * d * c * z / std::sqrt(1.0 - z * z) + g * z; };
  auto df = [&](double z, double c) { return 2.0 * d * c / std::pow(1.0 - z * z, 1.5) + g; };
  std::vector<FixedPoint> out;
  for (cplx zc : cand) {
    if (std::abs(zc.imag()) > 1e-6 || std::abs(zc.real()) >= 1.0) continue;
    for (double c : {1.0, -1.0}) {
      double z = zc.real();
      bool ok = false;
      for (int it = 0; it < 50; ++it) {
        const double fz = f(z, c);
        if (std::abs(fz) <= 1e-13 * (1.0 + std::abs(e) + std::abs(g) + std::abs(d))) {
          ok = true;
          break;
        }
        const double dz = fz / df(z, c);
        if (!std::isfinite(dz)) break;
        z -= dz;
        if (std::abs(z) >= 1.0) break;
      }
      if (!ok || std::abs(z - zc.real()) > 1e-4) continue;
      const double p = 0.5 * (1.0 + z);
      const double q = c > 0 ? 0.0 : kPi;
      bool dup = false;
      for (const auto& fp : out)
        if (std::abs(fp.p - p) < 1e-6 && std::abs(fp.q - q) < 1e-6) dup = true;
      if (dup) continue;
      const double r = std::sqrt(p * (1.0 - p));
      const double hqq = 2.0 * d * r * c;
      const double hpp = d * c / (2.0 * r * r * r) + 2.0 * g;
      FixedPoint fp;
      fp.p = p;
      fp.q = q;
      fp.lambda2 = -hqq * hpp;
      fp.stability = fp.lambda2 < 0 ? Stability::Elliptic : Stability::Hyperbolic;
      out.push_back(fp);
    }
  }
  std::sort(out.begin(), out.end(), [](const FixedPoint& x, const FixedPoint& y) { return x.q != y.q ? x.q < y.q : x.p < y.p; });
  return out;
}

struct SdeConfig {
  std::vector<double> sample_times;
  double dt{1e-3};
};

/// Stochastic phase diffusion: q gets an additive kick sqrt(2 gamma1 dt) xi per step on top of
/// the deterministic flow, which is advanced with a classical RK4 step in amplitude form.
inline Trajectory integrate_sde(const ClassicalSpec& s, const PhasePoint& start, const SdeConfig& cfg, RandomStream& rng) {
  s.validate();
  require(s.modes == 2, "integrate_sde: requires two modes");
  require(cfg.dt > 0.0, "integrate_sde: dt must be positive");
  require(!cfg.sample_times.empty(), "integrate_sde: no sample times");
  for (std::size_t k = 1; k < cfg.sample_times.size(); ++k)
    require(cfg.sample_times[k] >= cfg.sample_times[k - 1], "integrate_sde: sample times must be sorted");
  Trajectory tr;
  Amplitudes psi = to_amplitudes(start);
  Amplitudes k1, k2, k3, k4, tmp;
  double t = cfg.sample_times.front();
  auto record = [&]() {
    const PhasePoint pt = from_amplitudes(psi, 2);
    tr.times.push_back(t);
    tr.points.push_back(pt);
    tr.energies.push_back(classical_energy(s, pt, t));
  };
  auto step = [&](double h) {
    gpe_amplitude_rhs(s, t, psi, k1);
    tmp = psi + 0.5 * h * k1;
    gpe_amplitude_rhs(s, t + 0.5 * h, tmp, k2);
    tmp = psi + 0.5 * h * k2;
    gpe_amplitude_rhs(s, t + 0.5 * h, tmp, k3);
    tmp = psi + h * k3;
    gpe_amplitude_rhs(s, t + h, tmp, k4);
    psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (s.gamma1 > 0.0) {
      const double dq = std::sqrt(2.0 * s.gamma1 * h) * rng.normal();
      psi[0] *= std::polar(1.0, 0.5 * dq);
      psi[1] *= std::polar(1.0, -0.5 * dq);
    }
    psi /= psi.norm();
    t += h;
    ++tr.stats.accepted;
  };
  record();
  for (std::size_t k = 1; k < cfg.sample_times.size(); ++k) {
    const double target = cfg.sample_times[k];
    const double span = target - t;
    if (span > 0.0) {
      // equal substeps no longer than dt that land exactly on the sample time
      const long n = std::max(1L, static_cast<long>(std::ceil(span / cfg.dt - 1e-9)));
      const double h = span / static_cast<double>(n);
      const double t_begin = t;
      for (long j = 0; j < n; ++j) {
        step(h);
        t = t_begin + h * static_cast<double>(j + 1);
      }
    }
    t = target;
    record();
  }
  return tr;
}

}  // namespace bhps
