#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "bhps/core.hpp"
#include "bhps/fock_basis.hpp"
#include "bhps/operators.hpp"
#include "bhps/phase_point.hpp"

namespace bhps {

struct QuantumState {
  BasisPtr basis;
  CVector amp;

  double norm() const { return amp.norm(); }
  bool is_normalized(double tol = 1e-9) const { return std::abs(amp.norm() - 1.0) <= tol; }

  void check() const {
    require(basis != nullptr, "QuantumState: missing basis");
    require(amp.size() == basis->dim(), "QuantumState: amplitude vector does not match basis");
    require(amp.allFinite(), "QuantumState: non-finite amplitudes");
  }
};

struct DensityMatrix {
  BasisPtr basis;
  CMatrix rho;

  static DensityMatrix pure(const QuantumState& s) { return {s.basis, s.amp * s.amp.adjoint()}; }

  double trace() const { return rho.trace().real(); }
  double hermiticity_error() const { return (rho - rho.adjoint()).cwiseAbs().maxCoeff(); }
  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  void check() const {
    require(basis != nullptr, "DensityMatrix: missing basis");
    require(rho.rows() == basis->dim() && rho.cols() == basis->dim(), "DensityMatrix: shape does not match basis");
    require(rho.allFinite(), "DensityMatrix: non-finite entries");
    require(hermiticity_error() <= 1e-10, "DensityMatrix: not Hermitian");
    require(std::abs(trace() - 1.0) <= 1e-9, "DensityMatrix: trace differs from 1");
    require(min_eigenvalue() >= -1e-8, "DensityMatrix: negative eigenvalue");
  }
};

inline QuantumState fock_state(const BasisPtr& basis, const Occupation& occ) {
  const int k = basis->index(occ);
  require(k >= 0, "fock_state: occupation not in basis");
  QuantumState s{basis, CVector::Zero(basis->dim())};
  s.amp[k] = 1.0;
  return s;
}

/// (sum_j psi_j a_j^dagger)^N |vac> / sqrt(N!) for normalized amplitudes psi.
inline QuantumState coherent_state(const BasisPtr& basis, const std::array<cplx, 3>& psi) {
  const int m = basis->modes();
  const int n = basis->particles();
  double norm2 = 0.0;
  for (int j = 0; j < m; ++j) norm2 += std::norm(psi[j]);
  require(std::abs(norm2 - 1.0) <= 1e-12, "coherent_state: amplitudes not normalized");
  QuantumState s{basis, CVector::Zero(basis->dim())};
  const double lf = std::lgamma(n + 1.0);
  for (int k = 0; k < basis->dim(); ++k) {
    const Occupation& occ = basis->state(k);
    double logmag = 0.5 * lf;
    double phase = 0.0;
    bool zero = false;
    for (int j = 0; j < m; ++j) {
      logmag -= 0.5 * std::lgamma(occ[j] + 1.0);
      if (occ[j] == 0) continue;
      const double a = std::abs(psi[j]);
      if (a == 0.0) {
        zero = true;
        break;
      }
      logmag += occ[j] * std::log(a);
      phase += occ[j] * std::arg(psi[j]);
    }
    if (!zero) s.amp[k] = std::polar(std::exp(logmag), phase);
  }
  return s;
}

inline QuantumState coherent_state(const BasisPtr& basis, const PhasePoint& pt) {
  require(pt.modes == basis->modes(), "coherent_state: phase point and basis differ in mode count");
  return coherent_state(basis, pt.psi);
}

inline cplx expectation(const OperatorMatrix& op, const QuantumState& s) { return s.amp.dot(op.matrix * s.amp); }

/// tr(A rho) = sum_ij A_ij rho_ji.
inline cplx expectation(const OperatorMatrix& op, const DensityMatrix& d) {
  cplx acc = 0.0;
  for (int k = 0; k < op.matrix.outerSize(); ++k)
    for (SparseCMatrix::InnerIterator it(op.matrix, k); it; ++it) acc += it.value() * d.rho(it.col(), it.row());
  return acc;
}

/// <a_i^dagger a_j> for all i, j.
template <class State>
CMatrix correlation_matrix(const State& s) {
  const int m = s.basis->modes();
  CMatrix c(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      c(i, j) = expectation(hop_operator(s.basis, i, j), s);
      if (i == j) c(i, j) = c(i, j).real();
      else c(j, i) = std::conj(c(i, j));
    }
  return c;
}

struct SpdmResult {
  CMatrix matrix;
  RVector eigenvalues;  // descending
};

inline SpdmResult spdm_from_matrix(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
  RVector ev = es.eigenvalues().reverse();
  return {m, ev};
}

template <class State>
SpdmResult spdm(const State& s) {
  return spdm_from_matrix(correlation_matrix(s) / static_cast<double>(s.basis->particles()));
}

/// <J> = (Re c12, -Im c12, (n2 - n1)/2) with c12 = <a1^dagger a2>.
template <class State>
std::array<double, 3> bloch_vector(const State& s) {
  require(s.basis->modes() == 2, "bloch_vector: requires two modes");
  const CMatrix c = correlation_matrix(s);
  return {c(0, 1).real(), -c(0, 1).imag(), 0.5 * (c(1, 1).real() - c(0, 0).real())};
}

inline double vector_norm(const std::array<double, 3>& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

template <class State>
double variance(const OperatorMatrix& op, const State& s) {
  OperatorMatrix sq{op.basis, op.matrix * op.matrix, op.hermitian};
  const double m = expectation(op, s).real();
  return expectation(sq, s).real() - m * m;
}

/// Normalized superposition c1 |a> + c2 |b>.
inline QuantumState superpose(const QuantumState& a, const QuantumState& b, cplx c1, cplx c2) {
  require(a.basis == b.basis || *a.basis == *b.basis, "superpose: states live on different bases");
  CVector v = c1 * a.amp + c2 * b.amp;
  const double n = v.norm();
  require(n > 0.0, "superpose: superposition vanishes");
  return {a.basis, v / n};
}

}  // namespace bhps
