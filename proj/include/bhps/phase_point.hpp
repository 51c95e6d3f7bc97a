#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "bhps/core.hpp"

namespace bhps {

/// Three-mode mean-field coordinates; p2 = 1 - p1 - p3.
struct Coords3 {
  double p1{0.0}, p3{0.0}, q1{0.0}, q3{0.0};
};

/// A point of the mean-field phase space, stored as normalized mode amplitudes.
///
/// Two modes: psi = (sqrt(1-p), sqrt(p) e^{-iq}), the global phase fixed by arg psi1 = 0.
/// Three modes: psi = (sqrt(p1) e^{-iq1}, sqrt(p2), sqrt(p3) e^{-iq3}), fixed by arg psi2 = 0.
struct PhasePoint {
  int modes{2};
  std::array<cplx, 3> psi{cplx(1.0), cplx(0.0), cplx(0.0)};

  static PhasePoint from_pq(double p, double q) {
    require(std::isfinite(p) && std::isfinite(q), "PhasePoint: non-finite coordinates");
    require(p >= 0.0 && p <= 1.0, "PhasePoint: p must lie in [0,1], got " + std::to_string(p));
    PhasePoint pt;
    pt.modes = 2;
    pt.psi = {cplx(std::sqrt(1.0 - p)), std::sqrt(p) * std::polar(1.0, -q), cplx(0.0)};
    return pt;
  }

  static PhasePoint from_coords3(const Coords3& c) {
    require(std::isfinite(c.p1) && std::isfinite(c.p3) && std::isfinite(c.q1) && std::isfinite(c.q3),
            "PhasePoint: non-finite coordinates");
    require(c.p1 >= 0.0 && c.p3 >= 0.0 && c.p1 + c.p3 <= 1.0 + 1e-15,
            "PhasePoint: (p1, p3) must lie in the simplex p1, p3 >= 0, p1 + p3 <= 1");
    PhasePoint pt;
    pt.modes = 3;
    const double p2 = std::max(0.0, 1.0 - c.p1 - c.p3);
    pt.psi = {std::sqrt(c.p1) * std::polar(1.0, -c.q1), cplx(std::sqrt(p2)), std::sqrt(c.p3) * std::polar(1.0, -c.q3)};
    return pt;
  }

  /// Takes arbitrary amplitudes that are normalized to 1e-12 and fixes the gauge.
  template <class Vec>
  static PhasePoint from_amplitudes(const Vec& a, int modes) {
    require(modes == 2 || modes == 3, "PhasePoint: modes must be 2 or 3");
    double norm2 = 0.0;
    for (int j = 0; j < modes; ++j) {
      require(std::isfinite(a[j].real()) && std::isfinite(a[j].imag()), "PhasePoint: non-finite amplitude");
      norm2 += std::norm(a[j]);
    }
    require(std::abs(norm2 - 1.0) <= 1e-12, "PhasePoint: amplitudes not normalized (|psi|^2 = " + std::to_string(norm2) + ")");
    PhasePoint pt;
    pt.modes = modes;
    for (int j = 0; j < modes; ++j) pt.psi[j] = a[j];
    if (modes == 2) pt.psi[2] = 0.0;
    pt.fix_gauge();
    return pt;
  }

  /// Like from_amplitudes but rescales to unit norm first.
  template <class Vec>
  static PhasePoint normalized(const Vec& a, int modes) {
    double norm2 = 0.0;
    for (int j = 0; j < modes; ++j) norm2 += std::norm(a[j]);
    require(norm2 > 0.0 && std::isfinite(norm2), "PhasePoint: zero or non-finite amplitude vector");
    std::array<cplx, 3> b{};
    const double s = 1.0 / std::sqrt(norm2);
    for (int j = 0; j < modes; ++j) b[j] = a[j] * s;
    PhasePoint pt;
    pt.modes = modes;
    pt.psi = b;
    pt.fix_gauge();
    return pt;
  }

  int reference_mode() const { return modes == 2 ? 0 : 1; }

  void fix_gauge() {
    const cplx r = psi[reference_mode()];
    if (std::abs(r) == 0.0) return;
    const cplx phase = std::conj(r) / std::abs(r);
    for (int j = 0; j < modes; ++j) psi[j] *= phase;
    psi[reference_mode()] = std::abs(r);
  }

  double population(int j) const { return std::norm(psi[j]); }

  double p() const { return std::norm(psi[1]); }
  double q() const { return wrap_angle(std::arg(psi[0]) - std::arg(psi[1])); }

  Coords3 coords3() const {
    const double a2 = std::arg(psi[1]);
    return {std::norm(psi[0]), std::norm(psi[2]), wrap_angle(a2 - std::arg(psi[0])), wrap_angle(a2 - std::arg(psi[2]))};
  }

  /// Classical Bloch vector s for two modes: (Re, -Im) of conj(psi1) psi2 and (p - 1/2).
  std::array<double, 3> bloch() const {
    const cplx c = std::conj(psi[0]) * psi[1];
    return {c.real(), -c.imag(), 0.5 * (std::norm(psi[1]) - std::norm(psi[0]))};
  }

  double norm2() const {
    double s = 0.0;
    for (int j = 0; j < modes; ++j) s += std::norm(psi[j]);
    return s;
  }
};

}  // namespace bhps
