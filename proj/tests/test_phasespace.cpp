#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "bhps/bhps.hpp"

using namespace bhps;

namespace {

QuantumState random_state(const BasisPtr& b, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> nd;
  CVector v(b->dim());
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = cplx(nd(gen), nd(gen));
  return {b, v / v.norm()};
}

// Kolmogorov-Smirnov statistic against a continuous CDF.
template <class Cdf>
double ks_statistic(std::vector<double> x, Cdf&& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// Random streams

TEST(Philox, KnownAnswerVectors) {
  const auto z = Philox4x32::block({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(z[0], 0x6627e8d5u);
  EXPECT_EQ(z[1], 0xe169c58du);
  EXPECT_EQ(z[2], 0xbc57ac4cu);
  EXPECT_EQ(z[3], 0x9b00dbd8u);
  const auto p = Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(p[0], 0xd16cfe09u);
  EXPECT_EQ(p[1], 0x94fdccebu);
  EXPECT_EQ(p[2], 0x5001e420u);
  EXPECT_EQ(p[3], 0x24126ea1u);
}

TEST(RandomStream, DeterministicAndDistinct) {
  RandomStream a(42, 7, 1), b(42, 7, 1), c(42, 8, 1), d(42, 7, 2), e(43, 7, 1);
  for (int k = 0; k < 100; ++k) {
    const auto x = a.next_u32();
    EXPECT_EQ(x, b.next_u32());
    (void)c.next_u32();
    (void)d.next_u32();
    (void)e.next_u32();
  }
  RandomStream a2(42, 7, 1), c2(42, 8, 1), d2(42, 7, 2), e2(43, 7, 1);
  const auto x = a2.next_u64();
  EXPECT_NE(x, c2.next_u64());
  EXPECT_NE(x, d2.next_u64());
  EXPECT_NE(x, e2.next_u64());
}

TEST(RandomStream, UniformIsOpenInterval) {
  RandomStream r(1, 0);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double u = r.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
}

TEST(RandomStream, NormalAndGammaMoments) {
  RandomStream r(9, 3);
  const int n = 100000;
  double s1 = 0, s2 = 0, g1 = 0, g2 = 0;
  for (int k = 0; k < n; ++k) {
    const double x = r.normal();
    s1 += x;
    s2 += x * x;
    const double g = r.gamma_int(5);
    g1 += g;
    g2 += g * g;
  }
  EXPECT_NEAR(s1 / n, 0.0, 5 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 5 * std::sqrt(2.0 / n));
  const double gm = g1 / n;
  EXPECT_NEAR(gm, 5.0, 5 * std::sqrt(5.0 / n));
  EXPECT_NEAR(g2 / n - gm * gm, 5.0, 0.15);
  EXPECT_THROW(r.gamma_int(0), InvalidArgument);
}

TEST(RandomStream, BetaMatchesCdf) {
  RandomStream r(5, 0);
  std::vector<double> x(100000);
  for (auto& v : x) v = r.beta_int(3, 2);
  // Beta(3,2) CDF = u^3 (4 - 3u)
  const double d = ks_statistic(x, [](double u) { return u * u * u * (4 - 3 * u); });
  EXPECT_LT(d, 1.63 / std::sqrt(static_cast<double>(x.size())));
}

// ---------------------------------------------------------------------------------------------
// Samplers

TEST(Sampling, Su2OverlapLawKolmogorovSmirnov) {
  const int n = 20;
  const PhasePoint c = PhasePoint::from_pq(0.9045, 0.3);
  std::vector<double> u;
  const Ensemble e = sample_su2_husimi(c, n, 100000, 17, &u);
  // recompute the overlap from the points themselves
  for (std::size_t i = 0; i < e.size(); ++i) {
    const cplx ov = std::conj(c.psi[0]) * e.points[i].psi[0] + std::conj(c.psi[1]) * e.points[i].psi[1];
    ASSERT_NEAR(std::norm(ov), u[i], 1e-12);
    ASSERT_NEAR(e.points[i].norm2(), 1.0, 1e-12);
  }
  const double d = ks_statistic(u, [n](double x) { return std::pow(x, n + 1); });
  EXPECT_LT(d, 1.63 / std::sqrt(1e5));
}

TEST(Sampling, Su3OverlapLawKolmogorovSmirnov) {
  const int n = 12;
  const PhasePoint c = PhasePoint::from_coords3({0.2, 0.5, 1.0, -0.4});
  std::vector<double> u;
  sample_su3_husimi(c, n, 100000, 3, &u);
  const double d = ks_statistic(u, [n](double x) { return std::pow(x, n + 1) * ((n + 2) - (n + 1) * x); });
  EXPECT_LT(d, 1.63 / std::sqrt(1e5));
}

TEST(Sampling, Su2FirstMomentsReproduceCoherentState) {
  const int n = 20;
  const PhasePoint c = PhasePoint::from_pq(0.3, 2.0);
  const Ensemble e = sample_su2_husimi(c, n, 100000, 5);
  const auto s0 = c.bloch();
  for (int k = 0; k < 3; ++k) {
    double m = 0.0, m2 = 0.0;
    for (const auto& pt : e.points) {
      const double v = (n + 2.0) * pt.bloch()[k];
      m += v;
      m2 += v * v;
    }
    m /= e.size();
    const double se = std::sqrt((m2 / e.size() - m * m) / e.size());
    EXPECT_NEAR(m, n * s0[k], 5 * se) << "component " << k;
  }
}

TEST(Sampling, Su3CorrectedCorrelationReproducesCondensate) {
  const int n = 10;
  const PhasePoint c = PhasePoint::from_coords3({0.5, 0.3, 0.7, 2.0});
  const Ensemble e = sample_su3_husimi(c, n, 100000, 8);
  const CMatrix got = ensemble_correlation(e.points, 3, n, SamplerKind::Su3Husimi, true);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(std::abs(got(i, j) - std::conj(c.psi[i]) * c.psi[j]), 0.0, 0.01);
}

TEST(Sampling, GlauberAmplitudesAndSharedAngles) {
  const int n = 30;
  const PhasePoint c = PhasePoint::from_pq(0.7, 0.0);
  const Ensemble g = sample_glauber_husimi(c, n, 50000, 4);
  const Ensemble s = sample_su2_husimi(c, n, 50000, 4);
  ASSERT_EQ(g.alpha2.size(), g.size());
  double m = 0.0;
  for (double a : g.alpha2) m += a;
  m /= g.size();
  EXPECT_NEAR(m, n + 2.0, 5 * std::sqrt((n + 2.0) / g.size()));
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(g.points[i].psi, s.points[i].psi);
  const Ensemble off = sample_glauber_husimi(c, n, 10, 4, false);
  for (double a : off.alpha2) EXPECT_EQ(a, n);
}

TEST(Sampling, DeltaEnsembleAndValidation) {
  const PhasePoint c = PhasePoint::from_pq(0.4, 1.0);
  const Ensemble e = sample_delta(c, 7, 3);
  for (const auto& pt : e.points) EXPECT_EQ(pt.psi, c.psi);
  EXPECT_THROW(sample_delta(c, 7, 0), InvalidArgument);
  EXPECT_THROW(sample_su3_husimi(c, 7, 5, 0), InvalidArgument);
  EXPECT_THROW(sampler_from_string("wigner"), InvalidArgument);
  EXPECT_EQ(sampler_from_string(to_string(SamplerKind::GlauberHusimi)), SamplerKind::GlauberHusimi);
}

TEST(Sampling, PerTrajectoryStreamsArePrefixStable) {
  const PhasePoint c = PhasePoint::from_pq(0.5, 0.0);
  const Ensemble small = sample_su2_husimi(c, 10, 5, 99);
  const Ensemble big = sample_su2_husimi(c, 10, 50, 99);
  for (std::size_t i = 0; i < small.size(); ++i) EXPECT_EQ(small.points[i].psi, big.points[i].psi);
}

// ---------------------------------------------------------------------------------------------
// Husimi function

TEST(Husimi, SingleParticleImbalanceIsMinusHalf) {
  const BasisPtr b = build_fock_basis(2, 1);
  const HusimiGrid g = husimi_grid(fock_state(b, {1, 0, 0}), {41, 8});
  EXPECT_NEAR(phase_expectation_q(g, Component::Z).value, -0.5, 1e-12);
  EXPECT_NEAR(g.normalization(), 1.0, 1e-12);
}

TEST(Husimi, GridMatchesDirectOverlap) {
  const BasisPtr b = build_fock_basis(2, 9);
  const QuantumState s = random_state(b, 3);
  const HusimiGrid g = husimi_grid(s, {11, 12});
  for (std::size_t i = 0; i < g.p.size(); ++i)
    for (std::size_t j = 0; j < g.q.size(); ++j)
      EXPECT_NEAR(g.values(i, j), husimi_q(s, PhasePoint::from_pq(g.p[i], g.q[j])), 1e-13);
}

TEST(Husimi, QuadratureReproducesExpectations) {
  const int n = 20;
  const BasisPtr b = build_fock_basis(2, n);
  const AngularMomentum j = build_angular_momentum_ops(b);
  for (unsigned seed = 0; seed < 5; ++seed) {
    const QuantumState s = random_state(b, 100 + seed);
    const HusimiGrid g = husimi_grid(s, {400, 400});
    EXPECT_NEAR(g.normalization(), 1.0, 1e-6);
    const double ex[3] = {expectation(j.jx, s).real(), expectation(j.jy, s).real(), expectation(j.jz, s).real()};
    for (int k = 0; k < 3; ++k) {
      const QuadratureValue v = phase_expectation_q(g, static_cast<Component>(k));
      EXPECT_NEAR(v.value, ex[k], 1e-4);
      EXPECT_LT(v.error, 1e-2);
    }
  }
}

TEST(Husimi, CompletenessOfEigenbasis) {
  ModelSpec m;
  m.particles = 40;
  m.u = 0.25;
  const Eigensystem es = eigenstates(m);
  const BasisPtr b = build_fock_basis(2, 40);
  const HusimiGrid g = husimi_grid_sum(b, es.vectors, {31, 30});
  EXPECT_LT((g.values.array() - 1.0).abs().maxCoeff(), 1e-9);
}

TEST(Husimi, DensityMatrixMatchesPureAndMixture) {
  const BasisPtr b = build_fock_basis(2, 20);
  const QuantumState a = coherent_state(b, PhasePoint::from_pq(0.2, 0.0));
  const QuantumState c = coherent_state(b, PhasePoint::from_pq(0.8, 0.0));
  const GridResolution r{21, 20};
  const HusimiGrid ga = husimi_grid(a, r), gc = husimi_grid(c, r);
  const HusimiGrid gp = husimi_grid(DensityMatrix::pure(a), r);
  EXPECT_LT((gp.values - ga.values).cwiseAbs().maxCoeff(), 1e-12);
  DensityMatrix mix{b, 0.5 * (a.amp * a.amp.adjoint() + c.amp * c.amp.adjoint())};
  const HusimiGrid gm = husimi_grid(mix, r);
  EXPECT_LT((gm.values - 0.5 * (ga.values + gc.values)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Husimi, CoherentStateZeroAtAntipode) {
  const int n = 15;
  const BasisPtr b = build_fock_basis(2, n);
  const HusimiZeros z = husimi_zeros(coherent_state(b, PhasePoint::from_pq(0.3, 1.0)));
  ASSERT_EQ(z.total(), n);
  for (const auto& pt : z.points()) {
    EXPECT_NEAR(pt.p(), 0.7, 1e-6);
    EXPECT_NEAR(std::abs(wrap_signed(pt.q() - (1.0 + kPi))), 0.0, 1e-6);
  }
}

TEST(Husimi, FockStateZerosAtPoles) {
  const BasisPtr b = build_fock_basis(2, 10);
  const HusimiZeros z = husimi_zeros(fock_state(b, {7, 3, 0}));
  EXPECT_EQ(z.at_infinity, 7);
  ASSERT_EQ(z.roots.size(), 3u);
  for (cplx r : z.roots) EXPECT_EQ(std::abs(r), 0.0);
}

TEST(Husimi, ZerosAnnihilateQAndSatisfyVieta) {
  const int n = 20;
  const BasisPtr b = build_fock_basis(2, n);
  const QuantumState cat = superpose(coherent_state(b, PhasePoint::from_pq(0.2, 0.0)),
                                     coherent_state(b, PhasePoint::from_pq(0.8, 0.0)), 1.0, -1.0);
  for (const QuantumState& s : {random_state(b, 1), cat}) {
    const HusimiZeros z = husimi_zeros(s);
    EXPECT_EQ(z.total(), n);
    // rebuild the monic polynomial from its roots and compare coefficient ratios
    CVector poly = CVector::Zero(1);
    poly[0] = 1.0;
    for (cplx r : z.roots) {
      CVector next = CVector::Zero(poly.size() + 1);
      for (Eigen::Index k = 0; k < poly.size(); ++k) {
        next[k + 1] += poly[k];
        next[k] -= r * poly[k];
      }
      poly = next;
    }
    const int deg = static_cast<int>(z.roots.size());
    const CVector want = z.coefficients.head(deg + 1) / z.coefficients[deg];
    EXPECT_LT((poly - want).cwiseAbs().maxCoeff() / want.cwiseAbs().maxCoeff(), 1e-8);
    for (const auto& pt : z.points()) EXPECT_LT(husimi_q(s, pt), 1e-12);
  }
}

TEST(Husimi, PhaseExpectationOfDeltaFunction) {
  const PhasePoint pt = PhasePoint::from_pq(0.25, 0.5);
  EXPECT_NEAR(phase_expectation_p(8, pt, Component::Z), 8 * (0.25 - 0.5), 1e-15);
  EXPECT_NEAR(phase_expectation_p(8, pt, Component::X), 8 * std::sqrt(0.25 * 0.75) * std::cos(0.5), 1e-15);
}
