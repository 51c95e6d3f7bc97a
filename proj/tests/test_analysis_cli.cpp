#include <gtest/gtest.h>

#include <random>

#include "bhps/bhps.hpp"

using namespace bhps;

namespace {

ClassicalSpec trimer(double g) {
  ClassicalSpec s;
  s.modes = 3;
  s.g = g;
  s.delta = s.delta23 = 1.0;
  s.onsite = {2.0, 0.0, 4.0};
  return s;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bhps_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// Power spectrum

TEST(PowerSpectrum, ParsevalIdentity) {
  std::mt19937 gen(4);
  std::normal_distribution<double> nd;
  for (int n : {2, 7, 64, 1001}) {
    std::vector<double> t(n), x(n);
    double e = 0.0;
    for (int k = 0; k < n; ++k) {
      t[k] = 0.1 * k;
      x[k] = nd(gen);
      e += x[k] * x[k];
    }
    const PowerSpectrum ps = power_spectrum(t, x);
    double sum = 0.0;
    for (double p : ps.power) sum += p;
    EXPECT_NEAR(sum / e, 1.0, 1e-10) << n;
    EXPECT_NEAR(ps.frequency[1], 1.0 / (n * 0.1), 1e-12);
  }
}

TEST(PowerSpectrum, SinusoidHasSingleDominantBin) {
  const int n = 512;
  std::vector<double> t(n), x(n);
  for (int k = 0; k < n; ++k) {
    t[k] = k * 0.05;
    x[k] = std::sin(kTwoPi * 32.0 * k / n);
  }
  const PowerSpectrum ps = power_spectrum(t, x);
  const auto it = std::max_element(ps.power.begin(), ps.power.end());
  double sum = 0.0;
  for (double p : ps.power) sum += p;
  EXPECT_EQ(it - ps.power.begin(), 32);
  EXPECT_GT(*it / sum, 0.99);
}

TEST(PowerSpectrum, ConstantSeriesAtZeroFrequency) {
  std::vector<double> t(100), x(100, 2.5);
  for (int k = 0; k < 100; ++k) t[k] = k;
  const PowerSpectrum ps = power_spectrum(t, x);
  EXPECT_NEAR(ps.power[0], 100 * 6.25, 1e-9);
  for (std::size_t k = 1; k < ps.power.size(); ++k) EXPECT_LT(ps.power[k], 1e-20);
  const PowerSpectrum hann = power_spectrum(t, x, true);
  EXPECT_GT(hann.power[0], hann.power[1]);
}

TEST(PowerSpectrum, RejectsBadGrids) {
  EXPECT_THROW(power_spectrum({0.0, 1.0, 3.0}, {1.0, 2.0, 3.0}), InvalidArgument);
  EXPECT_THROW(power_spectrum({0.0}, {1.0}), InvalidArgument);
  EXPECT_THROW(power_spectrum({0.0, 1.0}, {1.0}), InvalidArgument);
}

// ---------------------------------------------------------------------------------------------
// Poincare section

TEST(Poincare, SectionRootsLieOnShell) {
  const ClassicalSpec s = trimer(-10.0);
  for (double p3 : {0.1, 0.4})
    for (double q3 : {0.0, 2.0}) {
      for (double r : section_p1_roots(s, -1.0, p3, q3)) EXPECT_NEAR(classical_energy_3(s, {r, p3, 0.0, q3}), -1.0, 1e-10);
    }
}

TEST(Poincare, IntegrableLimitGivesInvariantCurve) {
  const ClassicalSpec s = trimer(0.0);
  // normal-mode populations are conserved by the linear flow
  Eigen::Matrix3d h;
  h << 2.0, -1.0, 0.0, -1.0, 0.0, -1.0, 0.0, -1.0, 4.0;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(h);
  auto invariants = [&](const PhasePoint& pt) {
    const Amplitudes a = to_amplitudes(pt);
    Eigen::Vector3d v;
    for (int k = 0; k < 3; ++k) v[k] = std::norm(es.eigenvectors().col(k).cast<cplx>().dot(a));
    return v;
  };
  const double energy = 1.0;
  const auto start = section_point(s, energy, 0.3, 0.5);
  ASSERT_TRUE(start.has_value());
  SectionOptions opt;
  opt.t_max = 200.0;
  const SectionData d = poincare_section_3mode(s, {*start}, energy, opt);
  ASSERT_GT(d.records.size() + d.discarded_larger_branch, 5u);
  const Eigen::Vector3d ref = invariants(*start);
  for (const auto& r : d.records) {
    const PhasePoint pt = PhasePoint::from_coords3({r.p1, r.p3, 0.0, r.q3});
    EXPECT_LT((invariants(pt) - ref).cwiseAbs().maxCoeff(), 1e-3);
  }
}

TEST(Poincare, RecordsAreOnShellAndUpward) {
  const ClassicalSpec s = trimer(-5.0);
  std::vector<PhasePoint> starts;
  for (double p3 : {0.6, 0.7}) {
    const auto pt = section_point(s, 1.0, p3, 0.0);
    ASSERT_TRUE(pt.has_value()) << p3;
    starts.push_back(*pt);
  }
  SectionOptions opt;
  opt.t_max = 60.0;
  const SectionData d = poincare_section_3mode(s, starts, 1.0, opt, 2);
  ASSERT_FALSE(d.records.empty());
  for (const auto& r : d.records) {
    EXPECT_LE(std::abs(r.energy - 1.0), 1e-6);
    const PhasePoint pt = PhasePoint::from_coords3({r.p1, r.p3, 0.0, r.q3});
    EXPECT_GT(detail::section_phase_rate(s, r.t, to_amplitudes(pt)), 0.0);
  }
  for (std::size_t k = 1; k < d.records.size(); ++k)
    if (d.records[k].trajectory == d.records[k - 1].trajectory) EXPECT_GT(d.records[k].t, d.records[k - 1].t);
}

TEST(Poincare, RejectsOffShellStart) {
  const ClassicalSpec s = trimer(-5.0);
  const PhasePoint off = PhasePoint::from_coords3({0.3, 0.3, 0.0, 0.0});
  EXPECT_THROW(poincare_section_3mode(s, {off}, 1.0), InvalidArgument);
}

TEST(Poincare, EllipticIslandNearExpectedCenter) {
  const SectionFixedPoint fp = find_section_fixed_point(trimer(-5.0), 1.0, 0.66, 0.0);
  ASSERT_TRUE(fp.converged);
  EXPECT_NEAR(fp.p3, 0.66, 0.05);
  EXPECT_NEAR(wrap_signed(fp.q3), 0.0, 0.05);
  EXPECT_LT(std::abs(fp.trace), 2.0);
}

TEST(Poincare, TwoRootRegionIsTagged) {
  ScenarioConfig c = preset("fig11b");
  const ClassicalSpec s = ClassicalSpec::from_model(c.model);
  std::vector<PhasePoint> starts;
  for (const auto& st : c.section_starts)
    if (auto pt = section_point(s, c.section_energy, st[0], st[1])) starts.push_back(*pt);
  SectionOptions opt;
  opt.t_max = 100.0;
  const SectionData d = poincare_section_3mode(s, starts, c.section_energy, opt);
  std::size_t tagged = 0;
  for (const auto& r : d.records) tagged += r.two_roots;
  EXPECT_GE(tagged, 1u);
  EXPECT_TRUE(d.smaller_root_rule);
}

// ---------------------------------------------------------------------------------------------
// Stroboscopic map

TEST(Strobo, UndrivenMapStaysOnEnergyContour) {
  ClassicalSpec s;
  s.g = 5.0;
  s.drive = Drive{1.0, 0.0, kTwoPi};
  const auto m = stroboscopic_map(s, {PhasePoint::from_pq(0.3, 1.0)}, 50);
  ASSERT_EQ(m[0].size(), 51u);
  const double e0 = classical_energy_pq(s, m[0][0].first, m[0][0].second);
  for (const auto& [p, q] : m[0]) EXPECT_NEAR(classical_energy_pq(s, p, q), e0, 1e-8);
}

TEST(Strobo, PeriodDoubledOrbit) {
  ClassicalSpec s;
  s.g = 5.0;
  s.drive = Drive{1.0, 0.5, kTwoPi};
  const auto m = stroboscopic_map(s, {PhasePoint::from_pq(0.5, 1.5 * kPi)}, 2);
  EXPECT_LT(std::hypot(m[0][2].first - 0.5, wrap_signed(m[0][2].second - 1.5 * kPi)), 0.1);
  EXPECT_GT(std::hypot(m[0][1].first - 0.5, wrap_signed(m[0][1].second - 1.5 * kPi)), 0.1);
  const auto fp = find_periodic_point(s, 0.5, 1.5 * kPi, 2);
  ASSERT_TRUE(fp.has_value());
  EXPECT_NEAR(fp->first, 0.5, 0.1);
}

TEST(Strobo, ChaoticStartFillsArea) {
  ClassicalSpec s;
  s.g = 5.0;
  s.drive = Drive{1.0, 0.5, kTwoPi};
  const auto m = stroboscopic_map(s, {PhasePoint::from_pq(0.8, 0.0)}, 400);
  const std::vector<std::pair<double, double>> a(m[0].begin(), m[0].begin() + 100), b = m[0];
  EXPECT_GT(box_count(b, 20), box_count(a, 20));
  EXPECT_GT(box_count(b, 20), 100u);
}

TEST(Strobo, WavePacketSpreadsFromDrivenStart) {
  ClassicalSpec s;
  s.g = 5.0;
  s.drive = Drive{1.0, 0.5, kTwoPi};
  const std::vector<PhasePoint> starts = sample_su2_husimi(PhasePoint::from_pq(0.7, 0.0), 20, 200, 3).points;
  const auto m = stroboscopic_map(s, starts, 60);
  auto at = [&](std::size_t k) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& tr : m) pts.push_back(tr[k]);
    return box_count(pts, 20);
  };
  EXPECT_GT(at(60), at(1) + 20);
}

TEST(Strobo, RejectsUndrivenOrNegativeAmplitude) {
  ClassicalSpec s;
  EXPECT_THROW(stroboscopic_map(s, {PhasePoint::from_pq(0.5, 0.0)}, 2), InvalidArgument);
  s.drive = Drive{1.0, -0.1, kTwoPi};
  EXPECT_THROW(stroboscopic_map(s, {PhasePoint::from_pq(0.5, 0.0)}, 2), InvalidArgument);
}

// ---------------------------------------------------------------------------------------------
// IO and scenarios

TEST(Io, CsvRoundTripIsExact) {
  std::mt19937 gen(1);
  std::uniform_real_distribution<double> ud(-1e3, 1e3);
  ObservableSeries s({"t", "a", "b"});
  for (int k = 0; k < 50; ++k) s.add_row({k / 3.0, ud(gen), std::ldexp(ud(gen), -900)});
  s.add_row({1e300, -0.0, 5e-324});
  const fs::path dir = scratch("csv");
  write_series(dir / "s.csv", s, {{"key", "value with: colon"}});
  Metadata meta;
  const ObservableSeries r = read_series(dir / "s.csv", &meta);
  EXPECT_EQ(r.columns, s.columns);
  EXPECT_EQ(r.rows, s.rows);
  ASSERT_EQ(meta.size(), 1u);
  EXPECT_EQ(meta[0].second, "value with: colon");
}

TEST(Io, ParseErrorsCarryContext) {
  EXPECT_THROW(parse_csv("a,b\n1,2,3\n"), IoError);
  EXPECT_THROW(parse_csv("a,b\n1,x\n"), IoError);
  EXPECT_THROW(parse_csv("# only: meta\n"), IoError);
  EXPECT_THROW(read_text("/nonexistent/file.csv"), IoError);
  const fs::path dir = scratch("blocked");
  write_text(dir / "file", "x");
  try {
    write_text(dir / "file" / "sub" / "out.csv", "y");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("file"), std::string::npos);
  }
}

TEST(Io, ChecksumKnownAnswer) {
  EXPECT_EQ(hex64(fnv1a64("")), "cbf29ce484222325");
  EXPECT_EQ(hex64(fnv1a64("a")), "af63dc4c8601ec8c");
}

TEST(Scenario, UnknownPresetListsAvailable) {
  try {
    preset("fig99");
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("fig6"), std::string::npos);
    EXPECT_NE(msg.find("fig14"), std::string::npos);
  }
}

TEST(Scenario, PresetsValidateAndRoundTripThroughJson) {
  for (const auto& name : preset_names()) {
    const ScenarioConfig c = preset(name);
    EXPECT_NO_THROW(c.validate()) << name;
    const json j = c;
    const ScenarioConfig d = j.get<ScenarioConfig>();
    EXPECT_EQ(json(d).dump(), j.dump()) << name;
  }
}

TEST(Scenario, RunIsReproducibleFromManifest) {
  ScenarioConfig c = preset("fig6");
  c.ensembles[0].cfg.count = 40;
  c.t_end = 0.24;
  c.intervals = 6;
  c.snapshot_times = {0.0, 0.12};
  c.grid = {21, 20};
  c.output_dir = scratch("run_a").string();
  const ScenarioOutput a = run_scenario(c);
  EXPECT_TRUE(verify_manifest(a.manifest).empty());
  for (const char* f : {"exact.csv", "meanfield.csv", "ensemble_su2.csv", "snapshots_su2.csv", "exact_husimi_0.csv"})
    EXPECT_TRUE(fs::exists(a.directory / f)) << f;
  // rerun from the manifest alone into another directory, with more workers
  ScenarioConfig r = config_from_manifest(a.manifest);
  r.output_dir = scratch("run_b").string();
  r.workers = 3;
  const ScenarioOutput b = run_scenario(r);
  ASSERT_EQ(a.files, b.files);
  for (const auto& f : a.files) EXPECT_EQ(read_text(a.directory / f), read_text(b.directory / f)) << f;
  // emitted series parse back to the same numbers the library computes
  const ObservableSeries mf = read_series(a.directory / "meanfield.csv");
  for (std::size_t k = 0; k < mf.size(); ++k) EXPECT_NEAR(mf.at(k, "s_norm"), 0.5, 1e-12);
}

TEST(Scenario, ConfigErrors) {
  EXPECT_THROW(json::parse(R"({"tasks":["exact"]})").get<ScenarioConfig>(), InvalidArgument);
  ScenarioConfig c = preset("fig6");
  c.tasks = {"dance"};
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = preset("fig6");
  c.ensembles[0].cfg.sampler = SamplerKind::Su3Husimi;
  EXPECT_THROW(c.validate(), InvalidArgument);
  EXPECT_THROW(load_scenario_config("/nonexistent.json"), IoError);
}
