#include <gtest/gtest.h>

#include "bhps/bhps.hpp"

using namespace bhps;

namespace {

ClassicalSpec dimer(double g, double eps = 0.0, double delta = 1.0) {
  ClassicalSpec s;
  s.modes = 2;
  s.g = g;
  s.eps = eps;
  s.delta = delta;
  return s;
}

ClassicalSpec trimer(double g) {
  ClassicalSpec s;
  s.modes = 3;
  s.g = g;
  s.delta = s.delta23 = 1.0;
  s.onsite = {2.0, 0.0, 4.0};
  return s;
}

std::size_t count_fixed_points(double g) { return find_fixed_points_2mode(dimer(g)).size(); }

}  // namespace

TEST(MeanField, CouplingFollowsOrdering) {
  ModelSpec m;
  m.particles = 20;
  m.u = 0.5;
  EXPECT_DOUBLE_EQ(ClassicalSpec::from_model(m, Ordering::Q).g, 10.0);
  EXPECT_DOUBLE_EQ(ClassicalSpec::from_model(m, Ordering::P).g, 11.0);
  EXPECT_EQ(ordering_from_string("P"), Ordering::P);
  EXPECT_THROW(ordering_from_string("W"), InvalidArgument);
}

TEST(MeanField, EnergyFormsAgree) {
  const ClassicalSpec s = dimer(3.0, 0.4, 0.8);
  const PhasePoint pt = PhasePoint::from_pq(0.37, 2.1);
  EXPECT_NEAR(classical_energy(s, pt), classical_energy_pq(s, 0.37, 2.1), 1e-14);
  const ClassicalSpec t = trimer(-5.0);
  const Coords3 c{0.2, 0.5, 0.7, -1.2};
  EXPECT_NEAR(classical_energy(t, PhasePoint::from_coords3(c)), classical_energy_3(t, c), 1e-14);
}

TEST(MeanField, TwoModeFlowIsCanonical) {
  const ClassicalSpec s = dimer(4.0, 0.3, 1.1);
  const double h = 1e-6;
  for (double p : {0.1, 0.45, 0.83})
    for (double q : {0.2, 1.9, 4.0}) {
      const auto v = gpe_rhs(s, PhasePoint::from_pq(p, q));
      const double dhdp = (classical_energy_pq(s, p + h, q) - classical_energy_pq(s, p - h, q)) / (2 * h);
      const double dhdq = (classical_energy_pq(s, p, q + h) - classical_energy_pq(s, p, q - h)) / (2 * h);
      EXPECT_NEAR(v[0], -dhdq, 1e-8);
      EXPECT_NEAR(v[1], dhdp, 1e-8);
      const auto w = gpe_rhs_from_amplitudes(s, PhasePoint::from_pq(p, q));
      EXPECT_NEAR(v[0], w[0], 1e-12);
      EXPECT_NEAR(v[1], w[1], 1e-12);
    }
}

TEST(MeanField, ThreeModeFlowIsCanonical) {
  const ClassicalSpec s = trimer(-7.0);
  const double h = 1e-6;
  const Coords3 base{0.25, 0.35, 0.6, 2.3};
  const auto v = gpe_rhs(s, PhasePoint::from_coords3(base));
  auto hd = [&](int which) {
    Coords3 a = base, b = base;
    double* pa[4] = {&a.p1, &a.p3, &a.q1, &a.q3};
    double* pb[4] = {&b.p1, &b.p3, &b.q1, &b.q3};
    *pa[which] += h;
    *pb[which] -= h;
    return (classical_energy_3(s, a) - classical_energy_3(s, b)) / (2 * h);
  };
  EXPECT_NEAR(v[0], -hd(2), 1e-8);
  EXPECT_NEAR(v[1], -hd(3), 1e-8);
  EXPECT_NEAR(v[2], hd(0), 1e-8);
  EXPECT_NEAR(v[3], hd(1), 1e-8);
  const auto w = gpe_rhs_from_amplitudes(s, PhasePoint::from_coords3(base));
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(v[k], w[k], 1e-11);
}

TEST(MeanField, FlowIsDivergenceFree) {
  const ClassicalSpec s = dimer(6.0, -0.2);
  const double h = 1e-6;
  for (double p : {0.2, 0.6})
    for (double q : {0.5, 3.0}) {
      const double dpp = (gpe_rhs(s, PhasePoint::from_pq(p + h, q))[0] - gpe_rhs(s, PhasePoint::from_pq(p - h, q))[0]) / (2 * h);
      const double dqq = (gpe_rhs(s, PhasePoint::from_pq(p, q + h))[1] - gpe_rhs(s, PhasePoint::from_pq(p, q - h))[1]) / (2 * h);
      EXPECT_NEAR(dpp + dqq, 0.0, 1e-7);
    }
}

TEST(MeanField, CoordinateFormRejectsPoles) {
  EXPECT_THROW(gpe_rhs(dimer(1.0), PhasePoint::from_pq(0.0, 0.0)), InvalidArgument);
}

TEST(MeanField, LinearRabiOscillation) {
  TrajectoryConfig cfg;
  cfg.sample_times = linspace(0.0, 4.0, 40);
  const Trajectory tr = integrate_trajectory(dimer(0.0, 0.0, 1.3), PhasePoint::from_pq(0.0, 0.0), cfg);
  for (std::size_t k = 0; k < tr.times.size(); ++k) EXPECT_NEAR(tr.points[k].p(), std::pow(std::sin(1.3 * tr.times[k]), 2), 1e-9);
}

TEST(MeanField, EnergyAndNormConserved) {
  TrajectoryConfig cfg;
  cfg.sample_times = linspace(0.0, 50.0, 100);
  const Trajectory a = integrate_trajectory(dimer(10.0), PhasePoint::from_pq(0.9045, 0.0), cfg);
  const Trajectory b = integrate_trajectory(trimer(-10.0), PhasePoint::from_coords3({0.3, 0.3, 0.1, 2.0}), cfg);
  for (const Trajectory* t : {&a, &b})
    for (std::size_t k = 0; k < t->times.size(); ++k) {
      EXPECT_NEAR(t->energies[k], t->energies[0], 1e-8);
      EXPECT_NEAR(t->points[k].norm2(), 1.0, 1e-12);
      if (t == &a) EXPECT_NEAR(vector_norm(t->points[k].bloch()), 0.5, 1e-12);
    }
}

TEST(MeanField, BifurcationAtCriticalCoupling) {
  EXPECT_EQ(count_fixed_points(0.0), 2u);
  EXPECT_EQ(count_fixed_points(2.0 - 1e-6), 2u);
  EXPECT_EQ(count_fixed_points(2.0 + 1e-6), 4u);
  EXPECT_EQ(count_fixed_points(10.0), 4u);
  EXPECT_EQ(count_fixed_points(-10.0), 4u);
}

TEST(MeanField, FixedPointsAreStationaryWithCorrectStability) {
  for (const ClassicalSpec& s : {dimer(10.0), dimer(3.0, 0.7), dimer(-4.0, 0.2, 0.6)}) {
    for (const auto& fp : find_fixed_points_2mode(s)) {
      const auto v = gpe_rhs(s, PhasePoint::from_pq(fp.p, fp.q));
      EXPECT_NEAR(v[0], 0.0, 1e-10);
      EXPECT_NEAR(v[1], 0.0, 1e-9);
      // numerical Jacobian of (p, q) flow
      const double h = 1e-6;
      const auto vp = gpe_rhs(s, PhasePoint::from_pq(fp.p + h, fp.q)), vm = gpe_rhs(s, PhasePoint::from_pq(fp.p - h, fp.q));
      const auto wp = gpe_rhs(s, PhasePoint::from_pq(fp.p, fp.q + h)), wm = gpe_rhs(s, PhasePoint::from_pq(fp.p, fp.q - h));
      const double a = (vp[0] - vm[0]) / (2 * h), b = (wp[0] - wm[0]) / (2 * h);
      const double c = (vp[1] - vm[1]) / (2 * h), d = (wp[1] - wm[1]) / (2 * h);
      const double det = a * d - b * c;  // lambda^2 = -det for a traceless Jacobian
      EXPECT_NEAR(-det, fp.lambda2, 1e-5 * std::max(1.0, std::abs(fp.lambda2)));
    }
  }
}

TEST(MeanField, SelfTrappedPointsAtStrongCoupling) {
  const auto fps = find_fixed_points_2mode(dimer(10.0));
  ASSERT_EQ(fps.size(), 4u);
  int hyper = 0;
  for (const auto& fp : fps) {
    if (fp.stability == Stability::Hyperbolic) {
      ++hyper;
      EXPECT_NEAR(fp.p, 0.5, 1e-12);
      EXPECT_NEAR(fp.q, kPi, 1e-12);
    }
  }
  EXPECT_EQ(hyper, 1);
  // z^2 = 1 - (2 Delta / g)^2 for the trapped pair
  const double z = std::sqrt(1.0 - 0.04);
  std::vector<double> trapped;
  for (const auto& fp : fps)
    if (std::abs(fp.p - 0.5) > 1e-6) trapped.push_back(fp.p);
  ASSERT_EQ(trapped.size(), 2u);
  std::sort(trapped.begin(), trapped.end());
  EXPECT_NEAR(trapped[0], 0.5 * (1 - z), 1e-10);
  EXPECT_NEAR(trapped[1], 0.5 * (1 + z), 1e-10);
}

TEST(MeanField, StochasticPhaseDiffusionVariance) {
  ClassicalSpec s = dimer(0.0, 0.0, 0.0);
  s.gamma1 = 0.05;
  SdeConfig cfg{{0.0, 2.0}, 0.01};
  const int n = 20000;
  double m = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    RandomStream rng(7, i, 2);
    const Trajectory tr = integrate_sde(s, PhasePoint::from_pq(0.5, 0.0), cfg, rng);
    const double dq = wrap_signed(tr.points.back().q());
    m += dq;
    m2 += dq * dq;
  }
  m /= n;
  const double var = m2 / n - m * m;
  EXPECT_NEAR(m, 0.0, 5 * std::sqrt(0.2 / n));
  EXPECT_NEAR(var, 2 * s.gamma1 * 2.0, 0.2 * 0.05);
}

TEST(MeanField, SdeWithoutNoiseMatchesDeterministic) {
  const ClassicalSpec s = dimer(5.0, 0.1);
  const std::vector<double> times = linspace(0.0, 3.0, 6);
  RandomStream rng(1, 0, 2);
  const Trajectory a = integrate_sde(s, PhasePoint::from_pq(0.7, 0.3), {times, 1e-3}, rng);
  TrajectoryConfig cfg;
  cfg.sample_times = times;
  const Trajectory b = integrate_trajectory(s, PhasePoint::from_pq(0.7, 0.3), cfg);
  ASSERT_EQ(a.times.size(), b.times.size());
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    EXPECT_DOUBLE_EQ(a.times[k], b.times[k]);
    EXPECT_NEAR(a.points[k].p(), b.points[k].p(), 1e-9);
  }
}

TEST(MeanField, DrivenTunnelingEntersFlow) {
  ClassicalSpec s = dimer(5.0);
  s.drive = Drive{1.0, 0.5, kTwoPi};
  EXPECT_NEAR(s.tunneling(0.0), 1.5, 1e-15);
  EXPECT_NEAR(s.tunneling(0.5), 0.5, 1e-12);
  EXPECT_FALSE(s.autonomous());
  EXPECT_THROW(find_fixed_points_2mode(s), InvalidArgument);
}
