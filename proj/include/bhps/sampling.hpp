#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bhps/core.hpp"
#include "bhps/phase_point.hpp"
#include "bhps/rng.hpp"

namespace bhps {

enum class SamplerKind { Delta, Su2Husimi, Su3Husimi, GlauberHusimi };

inline std::string to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::Delta: return "delta";
    case SamplerKind::Su2Husimi: return "su2-husimi";
    case SamplerKind::Su3Husimi: return "su3-husimi";
    case SamplerKind::GlauberHusimi: return "glauber-husimi";
  }
  return "unknown";
}

inline SamplerKind sampler_from_string(const std::string& s) {
  if (s == "delta") return SamplerKind::Delta;
  if (s == "su2-husimi") return SamplerKind::Su2Husimi;
  if (s == "su3-husimi") return SamplerKind::Su3Husimi;
  if (s == "glauber-husimi") return SamplerKind::GlauberHusimi;
  throw InvalidArgument("unknown sampler '" + s + "' (expected delta, su2-husimi, su3-husimi, glauber-husimi)");
}

/// Set of phase points with sampling metadata. Stream id i always belongs to trajectory i.
struct Ensemble {
  int modes{2};
  int particles{1};
  SamplerKind kind{SamplerKind::Delta};
  std::uint64_t master_seed{0};
  std::vector<PhasePoint> points;
  std::vector<double> alpha2;  // Glauber amplitude |alpha|^2 per sample, empty otherwise

  std::size_t size() const { return points.size(); }
  std::uint64_t stream_id(std::size_t i) const { return static_cast<std::uint64_t>(i); }
  bool has_amplitudes() const { return !alpha2.empty(); }
};

namespace detail {

/// psi = sqrt(u) psi0 + sqrt(1-u) phi with u ~ Beta(N+1, M-1) and phi uniform on the unit sphere
/// of the orthogonal complement of psi0. This is the exact law of the Husimi function of |psi0>
/// under the unitarily invariant measure on CP^{M-1}.
inline PhasePoint sample_overlap_law(const PhasePoint& center, int particles, RandomStream& rng, double* u_out = nullptr) {
  const int m = center.modes;
  const double u = rng.beta_int(particles + 1, m - 1);
  std::array<cplx, 3> g{};
  for (int j = 0; j < m; ++j) g[j] = rng.complex_normal();
  cplx proj = 0.0;
  for (int j = 0; j < m; ++j) proj += std::conj(center.psi[j]) * g[j];
  double norm2 = 0.0;
  for (int j = 0; j < m; ++j) {
    g[j] -= proj * center.psi[j];
    norm2 += std::norm(g[j]);
  }
  const double inv = 1.0 / std::sqrt(norm2);
  std::array<cplx, 3> psi{};
  const double a = std::sqrt(u), b = std::sqrt(1.0 - u);
  for (int j = 0; j < m; ++j) psi[j] = a * center.psi[j] + b * inv * g[j];
  if (u_out) *u_out = u;
  return PhasePoint::normalized(psi, m);
}

inline void require_count(std::size_t count) { require(count >= 1, "sampler: count must be >= 1"); }

}  // namespace detail

inline Ensemble sample_delta(const PhasePoint& center, int particles, std::size_t count, std::uint64_t seed = 0) {
  detail::require_count(count);
  Ensemble e;
  e.modes = center.modes;
  e.particles = particles;
  e.kind = SamplerKind::Delta;
  e.master_seed = seed;
  e.points.assign(count, center);
  return e;
}

/// Samples of the Husimi function of the SU(2) coherent state at `center`.
inline Ensemble sample_su2_husimi(const PhasePoint& center, int particles, std::size_t count, std::uint64_t seed,
                                  std::vector<double>* overlaps = nullptr) {
  require(center.modes == 2, "sample_su2_husimi: center must be a two-mode point");
  require(particles >= 1, "sample_su2_husimi: particles must be >= 1");
  detail::require_count(count);
  Ensemble e;
  e.modes = 2;
  e.particles = particles;
  e.kind = SamplerKind::Su2Husimi;
  e.master_seed = seed;
  e.points.reserve(count);
  if (overlaps) overlaps->resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    RandomStream rng = make_stream(seed, i, StreamPurpose::Sampling);
    double u = 0.0;
    e.points.push_back(detail::sample_overlap_law(center, particles, rng, &u));
    if (overlaps) (*overlaps)[i] = u;
  }
  return e;
}

/// Samples of the Husimi function of the SU(3) coherent state at `center`.
inline Ensemble sample_su3_husimi(const PhasePoint& center, int particles, std::size_t count, std::uint64_t seed,
                                  std::vector<double>* overlaps = nullptr) {
  require(center.modes == 3, "sample_su3_husimi: center must be a three-mode point");
  require(particles >= 1, "sample_su3_husimi: particles must be >= 1");
  detail::require_count(count);
  Ensemble e;
  e.modes = 3;
  e.particles = particles;
  e.kind = SamplerKind::Su3Husimi;
  e.master_seed = seed;
  e.points.reserve(count);
  if (overlaps) overlaps->resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    RandomStream rng = make_stream(seed, i, StreamPurpose::Sampling);
    double u = 0.0;
    e.points.push_back(detail::sample_overlap_law(center, particles, rng, &u));
    if (overlaps) (*overlaps)[i] = u;
  }
  return e;
}

/// Glauber-Husimi samples: SU(2) angular part plus |alpha|^2 ~ Gamma(N+2, 1).
///
/// With `amplitude_noise` false every sample gets |alpha|^2 = N, which switches the amplitude
/// noise off while keeping the angular statistics.
inline Ensemble sample_glauber_husimi(const PhasePoint& center, int particles, std::size_t count, std::uint64_t seed,
                                      bool amplitude_noise = true) {
  Ensemble e = sample_su2_husimi(center, particles, count, seed);
  e.kind = SamplerKind::GlauberHusimi;
  e.alpha2.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!amplitude_noise) {
      e.alpha2[i] = particles;
      continue;
    }
    // separate stream so the angular part equals the SU(2) sampler's at the same seed
    RandomStream amp = make_stream(seed, i, StreamPurpose::Amplitude);
    e.alpha2[i] = amp.gamma_int(particles + 2);
  }
  return e;
}

inline Ensemble sample(SamplerKind kind, const PhasePoint& center, int particles, std::size_t count, std::uint64_t seed) {
  switch (kind) {
    case SamplerKind::Delta: return sample_delta(center, particles, count, seed);
    case SamplerKind::Su2Husimi: return sample_su2_husimi(center, particles, count, seed);
    case SamplerKind::Su3Husimi: return sample_su3_husimi(center, particles, count, seed);
    case SamplerKind::GlauberHusimi: return sample_glauber_husimi(center, particles, count, seed);
  }
  throw InvalidArgument("sample: unknown sampler");
}

}  // namespace bhps
