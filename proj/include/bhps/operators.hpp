#pragma once

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "bhps/core.hpp"
#include "bhps/fock_basis.hpp"
#include "bhps/model.hpp"

namespace bhps {

/// Sparse operator on a Fock basis.
struct OperatorMatrix {
  BasisPtr basis;
  SparseCMatrix matrix;
  bool hermitian{false};

  int dim() const { return static_cast<int>(matrix.rows()); }
  CMatrix dense() const { return CMatrix(matrix); }

  /// Largest |A - A^dagger| entry.
  double hermiticity_error() const {
    CMatrix d = dense();
    return (d - d.adjoint()).cwiseAbs().maxCoeff();
  }
};

namespace detail {

inline SparseCMatrix from_triplets(int dim, const std::vector<Eigen::Triplet<cplx>>& t) {
  SparseCMatrix m(dim, dim);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

}  // namespace detail

/// a_i^dagger a_j (zero-based mode indices).
inline OperatorMatrix hop_operator(const BasisPtr& basis, int i, int j) {
  require(i >= 0 && i < basis->modes() && j >= 0 && j < basis->modes(), "hop_operator: mode index out of range");
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(static_cast<std::size_t>(basis->dim()));
  for (int col = 0; col < basis->dim(); ++col) {
    Occupation occ = basis->state(col);
    if (i == j) {
      if (occ[i] != 0) t.emplace_back(col, col, static_cast<double>(occ[i]));
      continue;
    }
    if (occ[j] == 0) continue;
    const double amp = std::sqrt(static_cast<double>(occ[j]) * (occ[i] + 1));
    occ[j] -= 1;
    occ[i] += 1;
    t.emplace_back(basis->index(occ), col, amp);
  }
  return {basis, detail::from_triplets(basis->dim(), t), i == j};
}

inline OperatorMatrix number_operator(const BasisPtr& basis, int j) { return hop_operator(basis, j, j); }

inline OperatorMatrix total_number_operator(const BasisPtr& basis) {
  SparseCMatrix m(basis->dim(), basis->dim());
  m.setIdentity();
  m *= static_cast<double>(basis->particles());
  return {basis, m, true};
}

inline OperatorMatrix identity_operator(const BasisPtr& basis) {
  SparseCMatrix m(basis->dim(), basis->dim());
  m.setIdentity();
  return {basis, m, true};
}

/// a_i^dagger a_j + a_j^dagger a_i.
inline SparseCMatrix hopping_pair(const BasisPtr& basis, int i, int j) {
  SparseCMatrix a = hop_operator(basis, i, j).matrix;
  SparseCMatrix b = hop_operator(basis, j, i).matrix;
  SparseCMatrix s = a + b;
  s.makeCompressed();
  return s;
}

/// Hamiltonian split as H(t) = diag + delta12(t) * K12 + delta23 * K23,
/// where K_ij = -(a_i^dagger a_j + h.c.).
class Hamiltonian {
 public:
  Hamiltonian(const ModelSpec& spec, BasisPtr basis) : spec_(spec), basis_(std::move(basis)) {
    spec_.validate();
    require(basis_->modes() == spec_.modes && basis_->particles() == spec_.particles,
            "Hamiltonian: basis does not match model");
    const auto eps = spec_.onsite_energies();
    diag_.resize(basis_->dim());
    for (int k = 0; k < basis_->dim(); ++k) {
      const Occupation& occ = basis_->state(k);
      double e = 0.0;
      for (int j = 0; j < spec_.modes; ++j) e += eps[j] * occ[j] + 0.5 * spec_.u * occ[j] * (occ[j] - 1.0);
      diag_[k] = e;
    }
    cdiag_ = diag_.cast<cplx>();
    k12_ = -hopping_pair(basis_, 0, 1);
    if (spec_.modes == 3) k23_ = -hopping_pair(basis_, 1, 2);
  }

  const ModelSpec& spec() const { return spec_; }
  const BasisPtr& basis() const { return basis_; }
  int dim() const { return basis_->dim(); }
  bool time_dependent() const { return spec_.time_dependent(); }
  const RVector& diagonal() const { return diag_; }

  /// out = H(t) x for a vector or a block of column vectors.
  template <class In, class Out>
  void apply(double t, const In& x, Out& out) const {
    out.noalias() = cdiag_.asDiagonal() * x;
    out.noalias() += spec_.tunneling(t) * (k12_ * x);
    if (spec_.modes == 3) out.noalias() += spec_.delta23 * (k23_ * x);
  }

  SparseCMatrix sparse(double t) const {
    SparseCMatrix h(dim(), dim());
    std::vector<Eigen::Triplet<cplx>> tr;
    for (int k = 0; k < dim(); ++k) tr.emplace_back(k, k, diag_[k]);
    h.setFromTriplets(tr.begin(), tr.end());
    h += spec_.tunneling(t) * k12_;
    if (spec_.modes == 3) h += spec_.delta23 * k23_;
    h.makeCompressed();
    return h;
  }

  CMatrix dense(double t) const { return CMatrix(sparse(t)); }

 private:
  ModelSpec spec_;
  BasisPtr basis_;
  RVector diag_;
  CVector cdiag_;
  SparseCMatrix k12_;
  SparseCMatrix k23_;
};

inline OperatorMatrix build_hamiltonian(const ModelSpec& spec, const BasisPtr& basis, double t = 0.0) {
  Hamiltonian h(spec, basis);
  return {basis, h.sparse(t), true};
}

inline OperatorMatrix build_hamiltonian(const ModelSpec& spec, double t = 0.0) {
  return build_hamiltonian(spec, build_fock_basis(spec.modes, spec.particles), t);
}

/// Jx, Jy, Jz with Jz = (n2 - n1)/2.
struct AngularMomentum {
  OperatorMatrix jx, jy, jz;
};

inline AngularMomentum build_angular_momentum_ops(const BasisPtr& basis) {
  require(basis->modes() == 2, "build_angular_momentum_ops: requires two modes");
  SparseCMatrix a12 = hop_operator(basis, 0, 1).matrix;
  SparseCMatrix a21 = hop_operator(basis, 1, 0).matrix;
  SparseCMatrix n1 = number_operator(basis, 0).matrix;
  SparseCMatrix n2 = number_operator(basis, 1).matrix;
  SparseCMatrix jx = 0.5 * (a12 + a21);
  SparseCMatrix jy = cplx(0.0, 0.5) * (a12 - a21);
  SparseCMatrix jz = 0.5 * (n2 - n1);
  return {{basis, jx, true}, {basis, jy, true}, {basis, jz, true}};
}

/// Three-mode generators in the order X1, X2, Y1, Y2, Y3, Z1, Z2, Z3 with
/// Yk = i(a_k^dagger a_j - a_j^dagger a_k), Zk = a_k^dagger a_j + a_j^dagger a_k, j = k+1 mod 3.
inline std::array<OperatorMatrix, 8> build_su3_generators(const BasisPtr& basis) {
  require(basis->modes() == 3, "build_su3_generators: requires three modes");
  SparseCMatrix n1 = number_operator(basis, 0).matrix;
  SparseCMatrix n2 = number_operator(basis, 1).matrix;
  SparseCMatrix n3 = number_operator(basis, 2).matrix;
  std::array<OperatorMatrix, 8> g;
  g[0] = {basis, SparseCMatrix(n1 - n2), true};
  g[1] = {basis, SparseCMatrix((n1 + n2 - 2.0 * n3) / 3.0), true};
  for (int k = 0; k < 3; ++k) {
    const int j = (k + 1) % 3;
    SparseCMatrix akj = hop_operator(basis, k, j).matrix;
    SparseCMatrix ajk = hop_operator(basis, j, k).matrix;
    g[2 + k] = {basis, SparseCMatrix(kI * (akj - ajk)), true};
    g[5 + k] = {basis, SparseCMatrix(akj + ajk), true};
  }
  return g;
}

/// X1^2 + 3 X2^2 + sum_k (Yk^2 + Zk^2), equal to 4N(N/3+1) on the N-particle sector.
inline CMatrix su3_casimir(const std::array<OperatorMatrix, 8>& g) {
  CMatrix c = CMatrix::Zero(g[0].dim(), g[0].dim());
  auto sq = [](const OperatorMatrix& o) { return CMatrix(o.matrix * o.matrix); };
  c += sq(g[0]) + 3.0 * sq(g[1]);
  for (int k = 2; k < 8; ++k) c += sq(g[k]);
  return c;
}

}  // namespace bhps
