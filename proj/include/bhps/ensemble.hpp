#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bhps/core.hpp"
#include "bhps/meanfield.hpp"
#include "bhps/model.hpp"
#include "bhps/parallel.hpp"
#include "bhps/rng.hpp"
#include "bhps/sampling.hpp"
#include "bhps/series.hpp"
#include "bhps/states.hpp"

namespace bhps {

struct EnsembleConfig {
  std::size_t count{500};
  std::uint64_t seed{1};
  SamplerKind sampler{SamplerKind::Su2Husimi};
  Ordering ordering{Ordering::Q};
  bool stochastic{false};  // Langevin phase noise with rate gamma1 from the model
  double sde_dt{1e-3};
  double rtol{1e-10};
  double atol{1e-12};
  bool exclude_failures{false};
  int workers{1};

  void validate(int modes) const {
    require(count >= 1, "EnsembleConfig: count must be >= 1");
    require(sde_dt > 0.0, "EnsembleConfig: sde_dt must be positive");
    if (sampler == SamplerKind::Su2Husimi || sampler == SamplerKind::GlauberHusimi)
      require(modes == 2, "EnsembleConfig: " + to_string(sampler) + " requires two modes");
    if (sampler == SamplerKind::Su3Husimi) require(modes == 3, "EnsembleConfig: su3-husimi requires three modes");
    if (stochastic) require(modes == 2, "EnsembleConfig: stochastic propagation requires two modes");
  }
};

/// Phase points of every trajectory at shared sample times.
struct Snapshots {
  int modes{2};
  int particles{1};
  SamplerKind kind{SamplerKind::Delta};
  std::vector<double> times;
  std::vector<std::vector<PhasePoint>> points;  // [time][trajectory]
  std::vector<double> alpha2;                   // per trajectory, Glauber only
  std::vector<std::size_t> failed;              // trajectory ids excluded from the snapshots

  std::size_t trajectories() const { return points.empty() ? 0 : points.front().size(); }
};

/// Propagates every sample independently by the mean-field flow.
///
/// Trajectory i uses the random stream (seed, i) for its noise, so snapshots do not depend on
/// the number of workers.
inline Snapshots propagate_ensemble(const ModelSpec& spec, const Ensemble& ens, const std::vector<double>& times,
                                    const EnsembleConfig& cfg) {
  spec.validate();
  cfg.validate(spec.modes);
  require(ens.modes == spec.modes, "propagate_ensemble: ensemble and model differ in mode count");
  require(!times.empty(), "propagate_ensemble: no sample times");
  const std::size_t n = ens.size();
  require(n >= 1, "propagate_ensemble: empty ensemble");
  const ClassicalSpec base = ClassicalSpec::from_model(spec, cfg.ordering);
  std::vector<std::vector<PhasePoint>> per_traj(n);
  std::vector<std::string> errors(n);
  parallel_for(n, cfg.workers, [&](std::size_t i) {
    ClassicalSpec cs = base;
    if (ens.has_amplitudes()) cs.g = spec.u * ens.alpha2[i];
    try {
      Trajectory tr;
      if (cfg.stochastic) {
        RandomStream rng = make_stream(ens.master_seed, ens.stream_id(i), StreamPurpose::Noise);
        SdeConfig sc{times, cfg.sde_dt};
        tr = integrate_sde(cs, ens.points[i], sc, rng);
      } else {
        TrajectoryConfig tc;
        tc.sample_times = times;
        tc.rtol = cfg.rtol;
        tc.atol = cfg.atol;
        tr = integrate_trajectory(cs, ens.points[i], tc);
      }
      per_traj[i] = std::move(tr.points);
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
    }
  });
  Snapshots snap;
  snap.modes = spec.modes;
  snap.particles = spec.particles;
  snap.kind = ens.kind;
  snap.times = times;
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i].empty()) {
      ok.push_back(i);
      continue;
    }
    if (!cfg.exclude_failures)
      throw NumericalError("propagate_ensemble: trajectory " + std::to_string(i) + " failed: " + errors[i]);
    snap.failed.push_back(i);
  }
  require(!ok.empty(), "propagate_ensemble: every trajectory failed");
  snap.points.assign(times.size(), {});
  for (std::size_t k = 0; k < times.size(); ++k) {
    snap.points[k].reserve(ok.size());
    for (std::size_t i : ok) snap.points[k].push_back(per_traj[i][k]);
  }
  if (ens.has_amplitudes())
    for (std::size_t i : ok) snap.alpha2.push_back(ens.alpha2[i]);
  return snap;
}

namespace detail {

struct MeanAndError {
  double mean{0.0};
  double stderr_{0.0};
};

template <class Get>
MeanAndError mean_and_error(std::size_t n, Get&& get) {
  const double sum = pairwise_sum<double>(0, n, get);
  const double mean = sum / static_cast<double>(n);
  const double ss = pairwise_sum<double>(0, n, [&](std::size_t i) {
    const double d = get(i) - mean;
    return d * d;
  });
  const double var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

}  // namespace detail

/// Coefficient turning a trajectory average of s_k into <J_k>: N+2 for Husimi-sampled
/// ensembles, N for delta (P-function) ensembles; Glauber samples carry their own |alpha|^2.
inline double estimator_prefactor(SamplerKind kind, int particles) {
  return kind == SamplerKind::Delta ? static_cast<double>(particles) : particles + 2.0;
}

/// Monte-Carlo estimate of <J>/N with standard errors.
/// Columns: t, jx, jy, jz, bloch_norm, jx_err, jy_err, jz_err.
inline ObservableSeries ensemble_bloch(const Snapshots& snap) {
  require(snap.modes == 2, "ensemble_bloch: requires two modes");
  const double n = snap.particles;
  const bool glauber = !snap.alpha2.empty();
  const double pref = estimator_prefactor(snap.kind, snap.particles) / n;
  ObservableSeries out({"t", "jx", "jy", "jz", "bloch_norm", "jx_err", "jy_err", "jz_err"});
  for (std::size_t k = 0; k < snap.times.size(); ++k) {
    const auto& pts = snap.points[k];
    std::array<detail::MeanAndError, 3> m;
    for (int c = 0; c < 3; ++c)
      m[static_cast<std::size_t>(c)] = detail::mean_and_error(pts.size(), [&](std::size_t i) {
        const double w = glauber ? snap.alpha2[i] / n : pref;
        return w * pts[i].bloch()[static_cast<std::size_t>(c)];
      });
    const double b = std::sqrt(m[0].mean * m[0].mean + m[1].mean * m[1].mean + m[2].mean * m[2].mean);
    out.add_row({snap.times[k], m[0].mean, m[1].mean, m[2].mean, b, m[0].stderr_, m[1].stderr_, m[2].stderr_});
  }
  return out;
}

/// Trajectory average of conj(psi_i) psi_j. With `corrected`, applies the Husimi relation
/// <a_i^dagger a_j> = (N+M) E[conj(psi_i) psi_j] - delta_ij.
inline CMatrix ensemble_correlation(const std::vector<PhasePoint>& pts, int modes, int particles, SamplerKind kind,
                                    bool corrected) {
  CMatrix c(modes, modes);
  for (int i = 0; i < modes; ++i)
    for (int j = 0; j < modes; ++j) {
      const double re = pairwise_sum<double>(0, pts.size(), [&](std::size_t k) { return (std::conj(pts[k].psi[i]) * pts[k].psi[j]).real(); });
      const double im = pairwise_sum<double>(0, pts.size(), [&](std::size_t k) { return (std::conj(pts[k].psi[i]) * pts[k].psi[j]).imag(); });
      c(i, j) = cplx(re, im) / static_cast<double>(pts.size());
    }
  c = 0.5 * (c + c.adjoint());
  if (corrected && kind != SamplerKind::Delta) {
    c = (particles + static_cast<double>(modes)) * c - CMatrix::Identity(modes, modes);
    c /= static_cast<double>(particles);
  }
  return c;
}

/// SPDM eigenvalue series. Two modes: lambda = 1/2 +- |<J>|/N from the Bloch estimate.
/// Three modes: eigenvalues of the averaged correlation matrix (uncorrected by default).
/// Columns: t, lambda1..lambdaM, trace.
inline ObservableSeries ensemble_spdm(const Snapshots& snap, bool corrected = false) {
  std::vector<std::string> cols{"t"};
  for (int j = 1; j <= snap.modes; ++j) cols.push_back("lambda" + std::to_string(j));
  cols.push_back("trace");
  ObservableSeries out(cols);
  if (snap.modes == 2) {
    const ObservableSeries b = ensemble_bloch(snap);
    for (std::size_t k = 0; k < b.size(); ++k) {
      const double r = b.at(k, "bloch_norm");
      out.add_row({b.at(k, "t"), 0.5 + r, 0.5 - r, 1.0});
    }
    return out;
  }
  for (std::size_t k = 0; k < snap.times.size(); ++k) {
    const CMatrix c = ensemble_correlation(snap.points[k], snap.modes, snap.particles, snap.kind, corrected);
    const SpdmResult r = spdm_from_matrix(c);
    std::vector<double> row{snap.times[k]};
    for (int j = 0; j < snap.modes; ++j) row.push_back(r.eigenvalues[j]);
    row.push_back(c.trace().real());
    out.add_row(row);
  }
  return out;
}

/// Population-imbalance variance Var(Jz) from second moments of p:
/// Husimi: <n2> = (N+2) E[p] - 1, <n2^2> = (N+2)(N+3) E[p^2] - 3 <n2> - 2;
/// delta/P: <n2^2> = N(N-1) E[p^2] + N E[p].
inline double ensemble_var_jz(const std::vector<PhasePoint>& pts, int particles, SamplerKind kind) {
  const double n = particles;
  const double ep = pairwise_sum<double>(0, pts.size(), [&](std::size_t i) { return pts[i].p(); }) / pts.size();
  const double ep2 = pairwise_sum<double>(0, pts.size(), [&](std::size_t i) { return pts[i].p() * pts[i].p(); }) / pts.size();
  double m1, m2;
  if (kind == SamplerKind::Delta) {
    m1 = n * ep;
    m2 = n * (n - 1) * ep2 + n * ep;
  } else {
    m1 = (n + 2) * ep - 1.0;
    m2 = (n + 2) * (n + 3) * ep2 - 3.0 * m1 - 2.0;
  }
  // Jz = n2 - N/2
  return m2 - m1 * m1;
}

/// Coherence factor alpha = 2 <Jx>/N with standard error. Columns: t, alpha, alpha_err, var_jz.
inline ObservableSeries coherence_series(const Snapshots& snap) {
  require(snap.modes == 2, "coherence_series: requires two modes");
  const ObservableSeries b = ensemble_bloch(snap);
  ObservableSeries out({"t", "alpha", "alpha_err", "var_jz"});
  for (std::size_t k = 0; k < b.size(); ++k)
    out.add_row({b.at(k, "t"), 2.0 * b.at(k, "jx"), 2.0 * b.at(k, "jx_err"), ensemble_var_jz(snap.points[k], snap.particles, snap.kind)});
  return out;
}

}  // namespace bhps
