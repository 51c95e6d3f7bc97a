#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bhps/core.hpp"
#include "bhps/fock_basis.hpp"
#include "bhps/parallel.hpp"
#include "bhps/phase_point.hpp"
#include "bhps/states.hpp"

namespace bhps {

/// Density of the invariant measure on the two-mode sphere, dmu = (N+1)/(2 pi) dp dq.
inline double measure_constant(int particles) { return (particles + 1) / kTwoPi; }

/// <Omega(point)| psi> for a pure state.
inline cplx coherent_overlap(const QuantumState& s, const PhasePoint& pt) {
  return coherent_state(s.basis, pt).amp.dot(s.amp);
}

inline double husimi_q(const QuantumState& s, const PhasePoint& pt) { return std::norm(coherent_overlap(s, pt)); }

inline double husimi_q(const DensityMatrix& d, const PhasePoint& pt) {
  const CVector c = coherent_state(d.basis, pt).amp;
  return std::max(0.0, c.dot(d.rho * c).real());
}

namespace detail {

/// Row of two-mode overlap polynomial coefficients at fixed p:
/// <Omega(p,q)|psi> = sum_n b_n(p) w^n with w = e^{iq}, b_n = sqrt(C(N,n)) (1-p)^{(N-n)/2} p^{n/2} psi_n.
inline CVector overlap_row_coefficients(const CVector& psi, int n, double p) {
  CVector b(n + 1);
  const double lf = std::lgamma(n + 1.0);
  for (int k = 0; k <= n; ++k) {
    const double a = (n - k == 0) ? 1.0 : std::pow(1.0 - p, 0.5 * (n - k));
    const double c = (k == 0) ? 1.0 : std::pow(p, 0.5 * k);
    const double lb = 0.5 * (lf - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
    b[k] = std::exp(lb) * a * c * psi[k];
  }
  return b;
}

inline cplx horner(const CVector& b, cplx w) {
  cplx acc = 0.0;
  for (Eigen::Index k = b.size() - 1; k >= 0; --k) acc = acc * w + b[k];
  return acc;
}

}  // namespace detail

/// Uniform (p, q) grid: p spans [0, 1] including both ends, q spans [0, 2 pi) periodically.
struct HusimiGrid {
  int particles{0};
  std::vector<double> p;
  std::vector<double> q;
  RMatrix values;  // rows index p, columns index q

  double measure() const { return measure_constant(particles); }

  /// Quadrature weights along p: Gregory end corrections of third order on the trapezoid rule.
  std::vector<double> p_weights() const {
    const std::size_t n = p.size();
    const double h = n > 1 ? (p.back() - p.front()) / (n - 1) : 0.0;
    std::vector<double> w(n, h);
    if (n < 8) {
      w.front() = w.back() = 0.5 * h;
      return w;
    }
    const double c[3] = {3.0 / 8, 7.0 / 6, 23.0 / 24};
    for (int k = 0; k < 3; ++k) {
      w[static_cast<std::size_t>(k)] = c[k] * h;
      w[n - 1 - static_cast<std::size_t>(k)] = c[k] * h;
    }
    return w;
  }

  std::vector<double> trapezoid_p_weights() const {
    const std::size_t n = p.size();
    const double h = n > 1 ? (p.back() - p.front()) / (n - 1) : 0.0;
    std::vector<double> w(n, h);
    w.front() = w.back() = 0.5 * h;
    return w;
  }

  double q_weight() const { return kTwoPi / static_cast<double>(q.size()); }

  /// Integral of f(p, q) * Q over the sphere with the invariant measure.
  template <class F>
  double integrate(F&& f, bool trapezoid = false) const {
    const auto wp = trapezoid ? trapezoid_p_weights() : p_weights();
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < q.size(); ++j) row += f(p[i], q[j]) * values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      total += wp[i] * row;
    }
    return total * q_weight() * measure();
  }

  double normalization() const {
    return integrate([](double, double) { return 1.0; });
  }
};

struct GridResolution {
  int np{101};
  int nq{100};
};

inline HusimiGrid make_grid_axes(int particles, const GridResolution& res) {
  require(res.np >= 2 && res.nq >= 2, "husimi_grid: resolution must be >= 2 per axis");
  HusimiGrid g;
  g.particles = particles;
  g.p.resize(static_cast<std::size_t>(res.np));
  g.q.resize(static_cast<std::size_t>(res.nq));
  for (int i = 0; i < res.np; ++i) g.p[static_cast<std::size_t>(i)] = static_cast<double>(i) / (res.np - 1);
  for (int j = 0; j < res.nq; ++j) g.q[static_cast<std::size_t>(j)] = kTwoPi * j / res.nq;
  g.values = RMatrix::Zero(res.np, res.nq);
  return g;
}

/// Husimi function of a pure two-mode state on a uniform (p, q) grid, filled row-wise in parallel.
inline HusimiGrid husimi_grid(const QuantumState& s, const GridResolution& res, int workers = 1) {
  require(s.basis->modes() == 2, "husimi_grid: requires two modes");
  const int n = s.basis->particles();
  HusimiGrid g = make_grid_axes(n, res);
  std::vector<cplx> w(g.q.size());
  for (std::size_t j = 0; j < g.q.size(); ++j) w[j] = std::polar(1.0, g.q[j]);
  parallel_for(g.p.size(), workers, [&](std::size_t i) {
    const CVector b = detail::overlap_row_coefficients(s.amp, n, g.p[i]);
    for (std::size_t j = 0; j < g.q.size(); ++j)
      g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::norm(detail::horner(b, w[j]));
  });
  return g;
}

/// Husimi function of a density matrix: Q = sum_k w_k |<Omega|v_k>|^2 over its eigen-decomposition.
inline HusimiGrid husimi_grid(const DensityMatrix& d, const GridResolution& res, int workers = 1) {
  require(d.basis->modes() == 2, "husimi_grid: requires two modes");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (d.rho + d.rho.adjoint()));
  HusimiGrid total = make_grid_axes(d.basis->particles(), res);
  for (int k = 0; k < es.eigenvalues().size(); ++k) {
    const double wk = es.eigenvalues()[k];
    if (std::abs(wk) < 1e-15) continue;
    const HusimiGrid gk = husimi_grid(QuantumState{d.basis, es.eigenvectors().col(k)}, res, workers);
    total.values += wk * gk.values;
  }
  total.values = total.values.cwiseMax(0.0);
  return total;
}

/// Sum of Husimi functions of the columns of `vectors` (e.g. a complete eigenbasis).
inline HusimiGrid husimi_grid_sum(const BasisPtr& basis, const CMatrix& vectors, const GridResolution& res, int workers = 1) {
  HusimiGrid total = make_grid_axes(basis->particles(), res);
  for (int k = 0; k < vectors.cols(); ++k) total.values += husimi_grid(QuantumState{basis, vectors.col(k)}, res, workers).values;
  return total;
}

/// Zeros of the Husimi function of a pure two-mode state.
///
/// With z = sqrt(p/(1-p)) e^{iq}, <Omega|psi> is proportional to P(z) = sum_n sqrt(C(N,n)) psi_n z^n.
/// A degree deficit d means d zeros at z = infinity, i.e. at p = 1.
struct HusimiZeros {
  std::vector<cplx> roots;  // finite roots in z
  int at_infinity{0};
  CVector coefficients;  // P(z) coefficients, index = power

  static PhasePoint point_of(cplx z) {
    const double a = std::norm(z);
    return PhasePoint::from_pq(a / (1.0 + a), wrap_angle(std::arg(z)));
  }

  std::vector<PhasePoint> points() const {
    std::vector<PhasePoint> out;
    for (cplx z : roots) out.push_back(point_of(z));
    for (int k = 0; k < at_infinity; ++k) out.push_back(PhasePoint::from_pq(1.0, 0.0));
    return out;
  }

  int total() const { return static_cast<int>(roots.size()) + at_infinity; }
};

namespace detail {

/// Taylor coefficients of sum_k a_k x^k about x0 (repeated synthetic division).
template <class T>
std::vector<T> taylor_shift(std::vector<T> a, T x0) {
  const int m = static_cast<int>(a.size()) - 1;
  for (int j = 0; j < m; ++j)
    for (int k = m - 1; k >= j; --k) a[static_cast<std::size_t>(k)] += x0 * a[static_cast<std::size_t>(k + 1)];
  return a;
}

/// Replace clusters of computed roots that form one numerically multiple root by copies of their centroid.
/// A cluster of k roots is merged when the first k Taylor coefficients at the centroid vanish to `tol`
/// relative to their rounding scale.
inline std::vector<int> merge_multiple_roots(const CVector& c, std::vector<cplx>& ws, double tol = 64 * std::numeric_limits<double>::epsilon()) {
  std::vector<cplx> coef(c.data(), c.data() + c.size());
  std::vector<double> mag(static_cast<std::size_t>(c.size()));
  for (Eigen::Index k = 0; k < c.size(); ++k) mag[static_cast<std::size_t>(k)] = std::abs(c[k]);
  std::vector<bool> used(ws.size(), false);
  std::vector<cplx> out;
  std::vector<int> mult;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    if (used[i]) continue;
    const double radius = 0.5 * std::max(1.0, std::abs(ws[i]));
    cplx centroid = ws[i];
    std::vector<std::size_t> near;
    for (int pass = 0; pass < 4; ++pass) {
      near.clear();
      cplx sum = 0.0;
      for (std::size_t j = i; j < ws.size(); ++j)
        if (!used[j] && std::abs(ws[j] - centroid) <= radius) {
          near.push_back(j);
          sum += ws[j];
        }
      centroid = sum / static_cast<double>(near.size());
    }
    if (std::find(near.begin(), near.end(), i) == near.end()) near.push_back(i);
    std::sort(near.begin(), near.end(), [&](std::size_t a, std::size_t b) { return std::abs(ws[a] - centroid) < std::abs(ws[b] - centroid); });
    std::size_t accepted = 1;
    cplx centre = ws[i];
    for (std::size_t k = near.size(); k >= 2; --k) {
      cplx mean = 0.0;
      for (std::size_t j = 0; j < k; ++j) mean += ws[near[j]];
      mean /= static_cast<double>(k);
      const auto t = taylor_shift(coef, mean);
      const auto sc = taylor_shift(mag, std::abs(mean));
      bool ok = true;
      for (std::size_t j = 0; j < k && ok; ++j) ok = std::abs(t[j]) <= tol * sc[j];
      if (ok) {
        accepted = k;
        centre = mean;
        break;
      }
    }
    if (accepted == 1) {
      used[i] = true;
      out.push_back(ws[i]);
      mult.push_back(1);
      continue;
    }
    for (std::size_t j = 0; j < accepted; ++j) {
      used[near[j]] = true;
      out.push_back(centre);
      mult.push_back(static_cast<int>(accepted));
    }
  }
  ws = std::move(out);
  return mult;
}

}  // namespace detail

inline HusimiZeros husimi_zeros(const QuantumState& s, double coefficient_cutoff = 1e-14) {
  require(s.basis->modes() == 2, "husimi_zeros: requires two modes");
  const int n = s.basis->particles();
  require(s.amp.norm() > 0.0, "husimi_zeros: zero state");
  HusimiZeros out;
  out.coefficients.resize(n + 1);
  const double lf = std::lgamma(n + 1.0);
  for (int k = 0; k <= n; ++k) out.coefficients[k] = std::exp(0.5 * (lf - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0))) * s.amp[k];
  const double cmax = out.coefficients.cwiseAbs().maxCoeff();
  int deg = n;
  while (deg > 0 && std::abs(out.coefficients[deg]) <= coefficient_cutoff * cmax) --deg;
  int low = 0;
  while (low < deg && std::abs(out.coefficients[low]) <= coefficient_cutoff * cmax) ++low;
  out.at_infinity = n - deg;
  for (int k = 0; k < low; ++k) out.roots.emplace_back(0.0);
  const int m = deg - low;
  if (m == 0) return out;

  // Rescale z = s w so the reduced polynomial's end coefficients balance, working with logs.
  const double log_scale = (std::log(std::abs(out.coefficients[low])) - std::log(std::abs(out.coefficients[deg]))) / m;
  const double scale = std::exp(log_scale);
  CVector c(m + 1);
  for (int k = 0; k <= m; ++k) c[k] = out.coefficients[low + k] * std::exp(k * log_scale);
  c /= c[m];
  CMatrix comp = CMatrix::Zero(m, m);
  for (int k = 0; k < m; ++k) comp(0, k) = -c[m - 1 - k];
  for (int k = 1; k < m; ++k) comp(k, k - 1) = 1.0;
  Eigen::ComplexEigenSolver<CMatrix> es(comp, false);
  if (es.info() != Eigen::Success) throw NumericalError("husimi_zeros: companion eigensolver failed");
  std::vector<cplx> ws(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) ws[static_cast<std::size_t>(k)] = es.eigenvalues()[k];
  // merge before polishing: Newton scatters the members of a multiple root
  const std::vector<int> mult = detail::merge_multiple_roots(c, ws);
  for (std::size_t k = 0; k < ws.size(); ++k) {
    if (mult[k] > 1) continue;
    cplx& w = ws[k];
    for (int it = 0; it < 3; ++it) {
      cplx f = 0.0, df = 0.0;
      for (int j = m; j >= 0; --j) {
        df = df * w + f;
        f = f * w + c[j];
      }
      if (std::abs(df) == 0.0) break;
      const cplx step = f / df;
      if (!(std::abs(step) < 1e-3 * std::max(1.0, std::abs(w)))) break;
      w -= step;
    }
  }
  for (cplx w : ws) out.roots.push_back(scale * w);
  return out;
}

/// Result of a phase-space quadrature with an error estimate.
struct QuadratureValue {
  double value{0.0};
  double error{0.0};
};

enum class Component { X = 0, Y = 1, Z = 2 };

inline double classical_s(Component k, double p, double q) {
  const double r = std::sqrt(std::max(0.0, p * (1.0 - p)));
  switch (k) {
    case Component::X: return r * std::cos(q);
    case Component::Y: return r * std::sin(q);
    default: return p - 0.5;
  }
}

/// <J_k> = (N+2) * integral of s_k Q dmu; error estimated from the trapezoid-vs-corrected difference.
inline QuadratureValue phase_expectation_q(const HusimiGrid& g, Component k) {
  auto f = [k](double p, double q) { return classical_s(k, p, q); };
  const double pref = g.particles + 2.0;
  const double v = pref * g.integrate(f);
  const double vt = pref * g.integrate(f, true);
  return {v, std::abs(v - vt)};
}

/// <J_k> from a delta P-function at a point: N s_k(point).
inline double phase_expectation_p(int particles, const PhasePoint& pt, Component k) {
  return particles * classical_s(k, pt.p(), pt.q());
}

}  // namespace bhps
