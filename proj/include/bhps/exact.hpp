#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "bhps/core.hpp"
#include "bhps/integrator.hpp"
#include "bhps/model.hpp"
#include "bhps/operators.hpp"
#include "bhps/parallel.hpp"
#include "bhps/series.hpp"
#include "bhps/states.hpp"

namespace bhps {

struct PropagationConfig {
  double t_start{0.0};
  double t_end{1.0};
  std::vector<double> sample_times;  // empty: t_start and t_end only
  double rtol{1e-9};
  double atol{1e-9};
  double max_step{std::numeric_limits<double>::infinity()};

  static PropagationConfig uniform(double t0, double t1, int intervals) {
    PropagationConfig c;
    c.t_start = t0;
    c.t_end = t1;
    c.sample_times = linspace(t0, t1, intervals);
    return c;
  }

  void validate() const {
    require(std::isfinite(t_start) && std::isfinite(t_end) && t_end > t_start, "PropagationConfig: need t_end > t_start");
    require(rtol > 0 && atol > 0, "PropagationConfig: tolerances must be positive");
    require(max_step > 0, "PropagationConfig: max_step must be positive");
    for (std::size_t k = 0; k < sample_times.size(); ++k) {
      require(sample_times[k] >= t_start && sample_times[k] <= t_end, "PropagationConfig: sample time outside [t_start, t_end]");
      if (k > 0) require(sample_times[k] >= sample_times[k - 1], "PropagationConfig: sample times must be sorted");
    }
  }

  std::vector<double> samples() const {
    if (sample_times.empty()) return {t_start, t_end};
    std::vector<double> s = sample_times;
    if (s.back() < t_end) s.push_back(t_end);
    return s;
  }

  StepControl control() const {
    StepControl c;
    c.rtol = rtol;
    c.atol = atol;
    c.max_step = max_step;
    return c;
  }
};

/// Precomputed operators for the default observable rows of exact runs.
class ExactObservables {
 public:
  ExactObservables(const ModelSpec& spec, BasisPtr basis) : ham_(spec, basis), basis_(std::move(basis)) {
    const int m = basis_->modes();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) hops_.push_back(hop_operator(basis_, i, j));
    if (m == 2) {
      jz_ = build_angular_momentum_ops(basis_).jz;
      jz2_ = {basis_, jz_.matrix * jz_.matrix, true};
    }
  }

  std::vector<std::string> columns() const {
    if (basis_->modes() == 2)
      return {"t", "jx", "jy", "jz", "bloch_norm", "lambda_max", "lambda_min", "alpha", "n2", "var_jz", "energy", "norm"};
    return {"t", "n1", "n2", "n3", "lambda1", "lambda2", "lambda3", "energy", "norm"};
  }

  template <class State>
  CMatrix correlations(const State& s) const {
    const int m = basis_->modes();
    CMatrix c(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) c(i, j) = expectation(hops_[static_cast<std::size_t>(i * m + j)], s);
    return 0.5 * (c + c.adjoint());
  }

  std::vector<double> row(double t, const QuantumState& s) const {
    CVector hs(s.amp.size());
    ham_.apply(t, s.amp, hs);
    return make_row(t, s, s.amp.dot(hs).real(), s.amp.squaredNorm());
  }

  std::vector<double> row(double t, const DensityMatrix& d) const {
    CMatrix hr(d.rho.rows(), d.rho.cols());
    ham_.apply(t, d.rho, hr);
    return make_row(t, d, hr.trace().real(), d.trace());
  }

 private:
  template <class State>
  std::vector<double> make_row(double t, const State& s, double energy, double norm) const {
    const double n = basis_->particles();
    const CMatrix c = correlations(s);
    const SpdmResult sp = spdm_from_matrix(c / n);
    if (basis_->modes() == 2) {
      const double jx = c(0, 1).real() / n, jy = -c(0, 1).imag() / n, jz = 0.5 * (c(1, 1).real() - c(0, 0).real()) / n;
      const double b = std::sqrt(jx * jx + jy * jy + jz * jz);
      const double mz = expectation(jz_, s).real();
      const double var = expectation(jz2_, s).real() - mz * mz;
      return {t, jx, jy, jz, b, sp.eigenvalues[0], sp.eigenvalues[1], 2.0 * jx, c(1, 1).real() / n, var, energy, norm};
    }
    return {t, c(0, 0).real() / n, c(1, 1).real() / n, c(2, 2).real() / n, sp.eigenvalues[0], sp.eigenvalues[1],
            sp.eigenvalues[2], energy, norm};
  }

  Hamiltonian ham_;
  BasisPtr basis_;
  std::vector<OperatorMatrix> hops_;
  OperatorMatrix jz_, jz2_;
};

template <class State>
struct ExactResult {
  ObservableSeries series;
  State final;
  IntegratorStats stats;
};

using StateObserver = std::function<void(double, const QuantumState&)>;
using DensityObserver = std::function<void(double, const DensityMatrix&)>;

/// Unitary evolution of a pure state with the adaptive Dormand-Prince integrator.
inline ExactResult<QuantumState> evolve_schrodinger(const ModelSpec& spec, const QuantumState& psi0,
                                                    const PropagationConfig& cfg, const StateObserver& observer = {}) {
  spec.validate();
  cfg.validate();
  psi0.check();
  require(spec.gamma1 == 0.0, "evolve_schrodinger: gamma1 != 0, use evolve_master");
  require(psi0.is_normalized(1e-9), "evolve_schrodinger: initial state not normalized");
  const Hamiltonian ham(spec, psi0.basis);
  const ExactObservables obs(spec, psi0.basis);
  ExactResult<QuantumState> res{ObservableSeries(obs.columns()), psi0, {}};
  auto rhs = [&](double t, const CVector& y, CVector& dy) {
    dy.resize(y.size());
    ham.apply(t, y, dy);
    dy *= -kI;
  };
  CVector y = psi0.amp;
  res.stats = integrate_dopri5(rhs, y, cfg.t_start, cfg.samples(), cfg.control(), [&](std::size_t, double t, const CVector& v) {
    QuantumState s{psi0.basis, v};
    res.series.add_row(obs.row(t, s));
    if (observer) observer(t, s);
  });
  res.final = QuantumState{psi0.basis, y};
  return res;
}

/// Dephasing rates D_ab = (gamma1/2) sum_j (n_j(a) - n_j(b))^2.
inline RMatrix dephasing_rates(const FockBasis& basis, double gamma1) {
  const int d = basis.dim();
  RMatrix r(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      double s = 0.0;
      for (int j = 0; j < basis.modes(); ++j) {
        const double dn = basis.state(a)[j] - basis.state(b)[j];
        s += dn * dn;
      }
      r(a, b) = 0.5 * gamma1 * s;
    }
  return r;
}

/// drho/dt = -i[H, rho] - D o rho, propagated directly on the density matrix.
inline ExactResult<DensityMatrix> evolve_master(const ModelSpec& spec, const DensityMatrix& rho0,
                                                const PropagationConfig& cfg, const DensityObserver& observer = {}) {
  spec.validate();
  cfg.validate();
  rho0.check();
  const Hamiltonian ham(spec, rho0.basis);
  const ExactObservables obs(spec, rho0.basis);
  const CMatrix rates = dephasing_rates(*rho0.basis, spec.gamma1).cast<cplx>();
  ExactResult<DensityMatrix> res{ObservableSeries(obs.columns()), rho0, {}};
  CMatrix x;
  auto rhs = [&](double t, const CMatrix& r, CMatrix& dr) {
    x.resize(r.rows(), r.cols());
    ham.apply(t, r, x);
    dr = -kI * (x - x.adjoint());
    dr -= rates.cwiseProduct(r);
  };
  CMatrix y = rho0.rho;
  res.stats = integrate_dopri5(rhs, y, cfg.t_start, cfg.samples(), cfg.control(), [&](std::size_t, double t, const CMatrix& v) {
    DensityMatrix d{rho0.basis, v};
    res.series.add_row(obs.row(t, d));
    if (observer) observer(t, d);
  });
  res.final = DensityMatrix{rho0.basis, y};
  return res;
}

struct Eigensystem {
  RVector values;   // ascending
  CMatrix vectors;  // columns
};

inline Eigensystem eigenstates(const ModelSpec& spec, const BasisPtr& basis) {
  spec.validate();
  require(!spec.time_dependent(), "eigenstates: driven model has no stationary spectrum");
  const Hamiltonian ham(spec, basis);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(ham.dense(0.0));
  if (es.info() != Eigen::Success) throw NumericalError("eigenstates: eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

inline Eigensystem eigenstates(const ModelSpec& spec) {
  return eigenstates(spec, build_fock_basis(spec.modes, spec.particles));
}

struct FloquetResult {
  CMatrix propagator;
  CMatrix states;          // columns
  CVector multipliers;     // eigenvalues of the propagator
  RVector quasi_energies;  // in (-omega/2, omega/2]
  double period{0.0};

  double unitarity_error() const {
    const auto n = propagator.rows();
    return (propagator.adjoint() * propagator - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
  }
};

/// Maps -arg(lambda)/T into (-omega/2, omega/2].
inline double quasi_energy(cplx multiplier, double period) {
  const double omega = kTwoPi / period;
  double e = -std::arg(multiplier) / period;
  while (e <= -0.5 * omega) e += omega;
  while (e > 0.5 * omega) e -= omega;
  return e;
}

struct FloquetOptions {
  double rtol{1e-11};
  double atol{1e-12};
  int block_columns{16};
  int workers{1};
};

/// One-period propagator by integrating the identity in fixed column blocks.
inline FloquetResult floquet_states(const ModelSpec& spec, const BasisPtr& basis, const FloquetOptions& opt = {}) {
  spec.validate();
  require(spec.drive.has_value() && spec.drive->omega > 0.0, "floquet_states: model has no periodic drive");
  const Hamiltonian ham(spec, basis);
  const int d = basis->dim();
  const double period = spec.drive->period();
  FloquetResult res;
  res.period = period;
  res.propagator = CMatrix::Zero(d, d);
  const int bc = std::max(1, opt.block_columns);
  const int blocks = (d + bc - 1) / bc;
  StepControl ctl;
  ctl.rtol = opt.rtol;
  ctl.atol = opt.atol;
  parallel_for(static_cast<std::size_t>(blocks), opt.workers, [&](std::size_t b) {
    const int c0 = static_cast<int>(b) * bc;
    const int nc = std::min(bc, d - c0);
    CMatrix y = CMatrix::Identity(d, d).middleCols(c0, nc);
    auto rhs = [&](double t, const CMatrix& v, CMatrix& dv) {
      dv.resize(v.rows(), v.cols());
      ham.apply(t, v, dv);
      dv *= -kI;
    };
    integrate_dopri5(rhs, y, 0.0, {period}, ctl, [](std::size_t, double, const CMatrix&) {});
    res.propagator.middleCols(c0, nc) = y;
  });
  Eigen::ComplexSchur<CMatrix> schur(res.propagator);
  if (schur.info() != Eigen::Success) throw NumericalError("floquet_states: Schur decomposition failed");
  res.states = schur.matrixU();
  res.multipliers = schur.matrixT().diagonal();
  res.quasi_energies.resize(d);
  for (int k = 0; k < d; ++k) res.quasi_energies[k] = quasi_energy(res.multipliers[k], period);
  return res;
}

inline FloquetResult floquet_states(const ModelSpec& spec, const FloquetOptions& opt = {}) {
  return floquet_states(spec, build_fock_basis(spec.modes, spec.particles), opt);
}

}  // namespace bhps
