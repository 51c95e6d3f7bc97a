#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "bhps/analysis.hpp"
#include "bhps/core.hpp"
#include "bhps/ensemble.hpp"
#include "bhps/exact.hpp"
#include "bhps/husimi.hpp"
#include "bhps/io.hpp"
#include "bhps/meanfield.hpp"
#include "bhps/model.hpp"
#include "bhps/sampling.hpp"

namespace bhps {

using nlohmann::json;

/// Initial coherent state: (p, q) for two modes, (p1, p3, q1, q3) for three modes, or a single
/// occupied mode (1-based) when `mode` > 0.
struct InitialSpec {
  double p{0.5};
  double q{0.0};
  Coords3 c3{};
  int mode{0};

  PhasePoint point(int modes) const {
    if (mode > 0) {
      require(mode <= modes, "initial: mode index out of range");
      std::array<cplx, 3> a{};
      a[static_cast<std::size_t>(mode - 1)] = 1.0;
      return PhasePoint::from_amplitudes(a, modes);
    }
    if (modes == 2) return PhasePoint::from_pq(p, q);
    return PhasePoint::from_coords3(c3);
  }
};

/// One sampled ensemble run inside a scenario.
struct EnsembleRun {
  std::string label{"ens"};
  EnsembleConfig cfg;
  bool amplitude_noise{true};
};

/// State whose Husimi function is written by the "husimi" task.
struct HusimiStateSpec {
  std::string label;
  std::string type{"coherent"};  // coherent | fock | eigen | cat | mixed
  double p{0.5}, q{0.0};         // coherent
  double p_b{0.5}, q_b{0.0};     // second component of cat / mixed
  double sign{1.0};              // cat relative sign
  int n2{0};                     // fock
  int index{0};                  // eigen, 0 = ground state
};

struct ScenarioConfig {
  std::string name{"custom"};
  ModelSpec model;
  InitialSpec initial;
  std::vector<std::string> tasks;
  // propagation
  double t_end{1.0};
  int intervals{100};
  double rtol{1e-9};
  double atol{1e-10};
  std::vector<double> snapshot_times;
  std::vector<EnsembleRun> ensembles;
  int workers{1};
  // analysis
  GridResolution grid{};
  std::vector<HusimiStateSpec> states;
  std::vector<double> contour_g;
  int contour_np{101};
  int contour_nq{100};
  double section_energy{0.0};
  double section_t_max{200.0};
  std::vector<std::array<double, 2>> section_starts;  // (p3, q3)
  double spectrum_t_end{200.0};
  int spectrum_intervals{4000};
  bool hann{false};
  int strobe_periods{200};
  std::vector<std::array<double, 2>> strobe_starts;  // (p, q)
  std::vector<int> floquet_states;
  std::string output_dir{"out"};

  void validate() const {
    model.validate();
    require(!tasks.empty(), "scenario '" + name + "': no tasks");
    static const std::vector<std::string> known{"exact", "meanfield", "ensemble", "husimi", "contours",
                                                "poincare", "spectrum", "strobo", "floquet"};
    for (const auto& t : tasks)
      require(std::find(known.begin(), known.end(), t) != known.end(), "scenario '" + name + "': unknown task '" + t + "'");
    require(t_end > 0.0 && intervals >= 1, "scenario: need t_end > 0 and intervals >= 1");
    for (double s : snapshot_times) require(s >= 0.0 && s <= t_end, "scenario: snapshot time outside [0, t_end]");
    for (const auto& e : ensembles) e.cfg.validate(model.modes);
    require(workers >= 1, "scenario: workers must be >= 1");
  }

  bool has(const std::string& task) const { return std::find(tasks.begin(), tasks.end(), task) != tasks.end(); }

  std::vector<double> sample_times() const {
    std::vector<double> s = linspace(0.0, t_end, intervals);
    s.insert(s.end(), snapshot_times.begin(), snapshot_times.end());
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end(), [](double a, double b) { return std::abs(a - b) <= 1e-12; }), s.end());
    return s;
  }
};

// ---------------------------------------------------------------------------------------------
// JSON mapping

inline void to_json(json& j, const ScenarioConfig& c) {
  j = json::object();
  j["scenario"] = c.name;
  j["model"] = c.model;
  json ini;
  if (c.initial.mode > 0) ini["mode"] = c.initial.mode;
  else if (c.model.modes == 2) ini = {{"p", c.initial.p}, {"q", c.initial.q}};
  else ini = {{"p1", c.initial.c3.p1}, {"p3", c.initial.c3.p3}, {"q1", c.initial.c3.q1}, {"q3", c.initial.c3.q3}};
  j["initial"] = ini;
  j["tasks"] = c.tasks;
  j["propagation"] = {{"t_end", c.t_end}, {"intervals", c.intervals}, {"rtol", c.rtol}, {"atol", c.atol},
                      {"snapshot_times", c.snapshot_times}};
  json ens = json::array();
  for (const auto& e : c.ensembles)
    ens.push_back({{"label", e.label}, {"sampler", to_string(e.cfg.sampler)}, {"count", e.cfg.count}, {"seed", e.cfg.seed},
                   {"ordering", to_string(e.cfg.ordering)}, {"stochastic", e.cfg.stochastic}, {"sde_dt", e.cfg.sde_dt},
                   {"rtol", e.cfg.rtol}, {"atol", e.cfg.atol}, {"exclude_failures", e.cfg.exclude_failures},
                   {"amplitude_noise", e.amplitude_noise}});
  j["ensembles"] = ens;
  j["workers"] = c.workers;
  json st = json::array();
  for (const auto& s : c.states)
    st.push_back({{"label", s.label}, {"type", s.type}, {"p", s.p}, {"q", s.q}, {"p_b", s.p_b}, {"q_b", s.q_b},
                  {"sign", s.sign}, {"n2", s.n2}, {"index", s.index}});
  j["analysis"] = {{"grid", {{"np", c.grid.np}, {"nq", c.grid.nq}}},
                   {"states", st},
                   {"contour_g", c.contour_g},
                   {"contour_grid", {{"np", c.contour_np}, {"nq", c.contour_nq}}},
                   {"section", {{"energy", c.section_energy}, {"t_max", c.section_t_max}, {"starts", c.section_starts}}},
                   {"spectrum", {{"t_end", c.spectrum_t_end}, {"intervals", c.spectrum_intervals}, {"hann", c.hann}}},
                   {"strobo", {{"periods", c.strobe_periods}, {"starts", c.strobe_starts}}},
                   {"floquet_states", c.floquet_states}};
  j["output_dir"] = c.output_dir;
}

inline void from_json(const json& j, ScenarioConfig& c) {
  c = ScenarioConfig{};
  try {
    c.name = j.value("scenario", std::string("custom"));
    if (!j.contains("model")) throw InvalidArgument("config: missing 'model'");
    c.model = j.at("model").get<ModelSpec>();
    if (j.contains("initial")) {
      const auto& i = j.at("initial");
      c.initial.mode = i.value("mode", 0);
      c.initial.p = i.value("p", 0.5);
      c.initial.q = i.value("q", 0.0);
      c.initial.c3 = {i.value("p1", 1.0 / 3), i.value("p3", 1.0 / 3), i.value("q1", 0.0), i.value("q3", 0.0)};
    }
    c.tasks = j.value("tasks", std::vector<std::string>{});
    if (j.contains("propagation")) {
      const auto& p = j.at("propagation");
      c.t_end = p.value("t_end", c.t_end);
      c.intervals = p.value("intervals", c.intervals);
      c.rtol = p.value("rtol", c.rtol);
      c.atol = p.value("atol", c.atol);
      c.snapshot_times = p.value("snapshot_times", std::vector<double>{});
    }
    if (j.contains("ensembles")) {
      for (const auto& e : j.at("ensembles")) {
        EnsembleRun r;
        r.label = e.value("label", std::string("ens"));
        r.cfg.sampler = sampler_from_string(e.value("sampler", std::string("su2-husimi")));
        r.cfg.count = e.value("count", std::size_t{500});
        r.cfg.seed = e.value("seed", std::uint64_t{1});
        r.cfg.ordering = ordering_from_string(e.value("ordering", std::string("Q")));
        r.cfg.stochastic = e.value("stochastic", false);
        r.cfg.sde_dt = e.value("sde_dt", 1e-3);
        r.cfg.rtol = e.value("rtol", r.cfg.rtol);
        r.cfg.atol = e.value("atol", r.cfg.atol);
        r.cfg.exclude_failures = e.value("exclude_failures", false);
        r.amplitude_noise = e.value("amplitude_noise", true);
        c.ensembles.push_back(r);
      }
    }
    c.workers = j.value("workers", 1);
    if (j.contains("analysis")) {
      const auto& a = j.at("analysis");
      if (a.contains("grid")) c.grid = {a.at("grid").value("np", 101), a.at("grid").value("nq", 100)};
      if (a.contains("states"))
        for (const auto& s : a.at("states")) {
          HusimiStateSpec h;
          h.label = s.value("label", std::string("state") + std::to_string(c.states.size()));
          h.type = s.value("type", std::string("coherent"));
          h.p = s.value("p", 0.5);
          h.q = s.value("q", 0.0);
          h.p_b = s.value("p_b", 0.5);
          h.q_b = s.value("q_b", 0.0);
          h.sign = s.value("sign", 1.0);
          h.n2 = s.value("n2", 0);
          h.index = s.value("index", 0);
          c.states.push_back(h);
        }
      c.contour_g = a.value("contour_g", std::vector<double>{});
      if (a.contains("contour_grid")) {
        c.contour_np = a.at("contour_grid").value("np", 101);
        c.contour_nq = a.at("contour_grid").value("nq", 100);
      }
      if (a.contains("section")) {
        const auto& s = a.at("section");
        c.section_energy = s.value("energy", 0.0);
        c.section_t_max = s.value("t_max", 200.0);
        c.section_starts = s.value("starts", std::vector<std::array<double, 2>>{});
      }
      if (a.contains("spectrum")) {
        const auto& s = a.at("spectrum");
        c.spectrum_t_end = s.value("t_end", 200.0);
        c.spectrum_intervals = s.value("intervals", 4000);
        c.hann = s.value("hann", false);
      }
      if (a.contains("strobo")) {
        c.strobe_periods = a.at("strobo").value("periods", 200);
        c.strobe_starts = a.at("strobo").value("starts", std::vector<std::array<double, 2>>{});
      }
      c.floquet_states = a.value("floquet_states", std::vector<int>{});
    }
    c.output_dir = j.value("output_dir", std::string("out"));
  } catch (const json::exception& ex) {
    throw InvalidArgument(std::string("config: ") + ex.what());
  }
}

inline ScenarioConfig load_scenario_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& ex) {
    throw InvalidArgument("config '" + path.string() + "': " + ex.what());
  }
  return j.get<ScenarioConfig>();
}

// ---------------------------------------------------------------------------------------------
// Presets

namespace detail {

inline EnsembleRun make_run(std::string label, SamplerKind kind, std::size_t count, Ordering ord = Ordering::Q,
                            bool stochastic = false) {
  EnsembleRun r;
  r.label = std::move(label);
  r.cfg.sampler = kind;
  r.cfg.count = count;
  r.cfg.ordering = ord;
  r.cfg.stochastic = stochastic;
  return r;
}

inline ModelSpec dimer(int n, double un, double eps = 0.0) {
  ModelSpec m;
  m.modes = 2;
  m.particles = n;
  m.delta = 1.0;
  m.eps = eps;
  m.u = un / n;
  return m;
}

inline ModelSpec trimer(int n, double un) {
  ModelSpec m;
  m.modes = 3;
  m.particles = n;
  m.delta = m.delta23 = 1.0;
  m.onsite = {2.0, 0.0, 4.0};
  m.u = un / n;
  return m;
}

inline ModelSpec driven(int n, double un, double delta1) {
  ModelSpec m = dimer(n, un);
  m.drive = Drive{1.0, delta1, kTwoPi};
  return m;
}

inline std::vector<std::array<double, 2>> strobe_grid() {
  std::vector<std::array<double, 2>> s;
  for (int i = 1; i <= 7; ++i)
    for (int k = 0; k < 4; ++k) s.push_back({i / 8.0, k * kPi / 2});
  return s;
}

}  // namespace detail

inline std::map<std::string, std::function<ScenarioConfig()>> preset_table() {
  using namespace detail;
  std::map<std::string, std::function<ScenarioConfig()>> t;
  t["fig3"] = [] {
    ScenarioConfig c;
    c.model = dimer(40, 400.0);  // U = 10
    c.tasks = {"husimi"};
    c.states = {{"coherent", "coherent", 0.5, 0.0}, {"fock", "fock"}, {"ground", "eigen"}};
    c.states[1].n2 = 20;
    return c;
  };
  t["fig4"] = [] {
    ScenarioConfig c;
    c.model = dimer(20, 0.0);
    c.tasks = {"husimi"};
    c.states = {{"cat_plus", "cat", 0.2, 0.0, 0.8, 0.0, 1.0},
                {"cat_minus", "cat", 0.2, 0.0, 0.8, 0.0, -1.0},
                {"mixed", "mixed", 0.2, 0.0, 0.8, 0.0, 1.0}};
    return c;
  };
  t["fig5"] = [] {
    ScenarioConfig c;
    c.model = dimer(40, 10.0);
    c.tasks = {"contours", "husimi"};
    c.contour_g = {0.0, 10.0};
    for (int n : {1, 15, 23, 34}) {
      HusimiStateSpec s;
      s.label = "eigen" + std::to_string(n);
      s.type = "eigen";
      s.index = n - 1;
      c.states.push_back(s);
    }
    return c;
  };
  t["fig6"] = [] {
    ScenarioConfig c;
    c.model = dimer(20, 10.0);
    c.initial.p = 0.9045;
    c.tasks = {"exact", "meanfield", "ensemble"};
    c.t_end = 0.5;
    c.intervals = 50;
    c.snapshot_times = {0.0, 0.12, 0.24, 0.36, 0.48};
    c.ensembles = {make_run("su2", SamplerKind::Su2Husimi, 500)};
    return c;
  };
  t["fig7"] = [] {
    ScenarioConfig c;
    c.model = driven(20, 5.0, 0.5);
    c.tasks = {"strobo"};
    c.strobe_periods = 300;
    c.strobe_starts = strobe_grid();
    c.strobe_starts.push_back({0.5, 1.5 * kPi});
    c.strobe_starts.push_back({0.7, 0.0});
    return c;
  };
  t["fig8"] = [] {
    ScenarioConfig c;
    c.model = driven(20, 5.0, 0.5);
    c.initial = {0.7, 0.0};
    c.tasks = {"exact", "ensemble"};
    c.t_end = 4.0;
    c.intervals = 80;
    c.snapshot_times = {0.0, 1.0, 2.0, 3.0, 4.0};
    c.ensembles = {make_run("su2", SamplerKind::Su2Husimi, 150)};
    return c;
  };
  t["fig9"] = [] {
    ScenarioConfig c;
    c.model = driven(20, 5.0, 0.5);
    c.initial = {0.5, 1.5 * kPi};
    c.tasks = {"exact", "meanfield", "ensemble"};
    c.t_end = 10.0;
    c.intervals = 200;
    c.ensembles = {make_run("su2", SamplerKind::Su2Husimi, 500)};
    return c;
  };
  t["fig10"] = [] {
    ScenarioConfig c;
    c.model = driven(50, 5.0, 0.5);
    c.tasks = {"floquet"};
    c.floquet_states = {0, 12, 25, 40};
    return c;
  };
  t["fig11"] = [] {
    ScenarioConfig c;
    c.model = trimer(1, -5.0);
    c.tasks = {"poincare"};
    c.section_energy = 1.0;
    c.section_t_max = 150.0;
    for (double p3 : {0.05, 0.2, 0.35, 0.5, 0.6, 0.64, 0.7, 0.75, 0.8})
      for (double q3 : {0.0, kPi}) c.section_starts.push_back({p3, q3});
    return c;
  };
  t["fig11b"] = [] {
    ScenarioConfig c = preset_table().at("fig11")();
    c.model.u = -10.0;
    c.section_energy = -1.0;
    c.tasks = {"poincare", "spectrum"};
    c.section_starts.clear();
    for (double p3 : {0.05, 0.15, 0.3, 0.45, 0.6, 0.75, 0.9})
      for (double q3 : {0.0, kPi / 2, kPi, 1.5 * kPi}) c.section_starts.push_back({p3, q3});
    return c;
  };
  t["fig12"] = [] {
    ScenarioConfig c;
    c.model = trimer(80, -10.0);
    c.initial.mode = 1;
    c.tasks = {"exact", "meanfield", "ensemble"};
    c.t_end = 5.0;
    c.intervals = 100;
    c.ensembles = {make_run("su3", SamplerKind::Su3Husimi, 500)};
    return c;
  };
  t["fig13"] = [] {
    ScenarioConfig c = preset_table().at("fig12")();
    c.initial.mode = 3;
    return c;
  };
  t["fig14"] = [] {
    ScenarioConfig c;
    c.model = dimer(20, 0.0);
    c.model.gamma1 = 0.01;
    c.tasks = {"exact", "ensemble"};
    c.t_end = 60.0;
    c.intervals = 120;
    c.snapshot_times = {0.0, 30.0, 60.0};
    c.ensembles = {make_run("q", SamplerKind::Su2Husimi, 500, Ordering::Q, true),
                   make_run("p", SamplerKind::Delta, 500, Ordering::P, true)};
    c.ensembles[1].cfg.seed = 2;
    return c;
  };
  t["fig15"] = [] {
    ScenarioConfig c = preset_table().at("fig14")();
    c.model.u = 10.0 / c.model.particles;
    return c;
  };
  t["fig16"] = [] {
    ScenarioConfig c;
    c.model = dimer(50, 5.0);  // U = 0.1
    c.initial = {0.7, 0.0};
    c.tasks = {"exact", "ensemble"};
    c.t_end = 10.0;
    c.intervals = 200;
    c.ensembles = {make_run("su2", SamplerKind::Su2Husimi, 500), make_run("glauber", SamplerKind::GlauberHusimi, 500)};
    return c;
  };
  return t;
}

inline std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& kv : preset_table()) out.push_back(kv.first);
  return out;
}

inline ScenarioConfig preset(const std::string& name) {
  const auto t = preset_table();
  const auto it = t.find(name);
  if (it == t.end()) {
    std::string list;
    for (const auto& kv : t) list += (list.empty() ? "" : ", ") + kv.first;
    throw InvalidArgument("unknown preset '" + name + "' (available: " + list + ")");
  }
  ScenarioConfig c = it->second();
  c.name = name;
  c.output_dir = "out/" + name;
  return c;
}

// ---------------------------------------------------------------------------------------------
// Runner

struct ScenarioOutput {
  fs::path directory;
  std::vector<std::string> files;  // relative to directory, in write order
  fs::path manifest;
};

namespace detail {

inline Metadata base_metadata(const ScenarioConfig& c, const std::string& quantity) {
  return {{"scenario", c.name}, {"quantity", quantity}, {"modes", std::to_string(c.model.modes)},
          {"particles", std::to_string(c.model.particles)}, {"version", kVersion}};
}

inline QuantumState build_husimi_state(const ScenarioConfig& c, const HusimiStateSpec& s, const BasisPtr& basis,
                                       const Eigensystem* eig) {
  if (s.type == "coherent") return coherent_state(basis, PhasePoint::from_pq(s.p, s.q));
  if (s.type == "fock") return fock_state(basis, {c.model.particles - s.n2, s.n2, 0});
  if (s.type == "eigen") {
    require(eig != nullptr, "husimi: eigenstates unavailable");
    require(s.index >= 0 && s.index < basis->dim(), "husimi: eigenstate index out of range");
    return QuantumState{basis, eig->vectors.col(s.index)};
  }
  if (s.type == "cat") {
    const QuantumState a = coherent_state(basis, PhasePoint::from_pq(s.p, s.q));
    const QuantumState b = coherent_state(basis, PhasePoint::from_pq(s.p_b, s.q_b));
    return superpose(a, b, 1.0, s.sign);
  }
  throw InvalidArgument("husimi: unknown state type '" + s.type + "'");
}

}  // namespace detail

/// Runs every task of the scenario and writes CSV outputs plus manifest.json into output_dir.
inline ScenarioOutput run_scenario(const ScenarioConfig& c) {
  c.validate();
  ScenarioOutput out;
  out.directory = c.output_dir;
  ensure_directory(out.directory);
  auto emit = [&](const std::string& file, const Table& t) {
    write_table(out.directory / file, t);
    out.files.push_back(file);
  };
  auto emit_series = [&](const std::string& file, const ObservableSeries& s, const Metadata& m) {
    emit(file, Table{m, s.columns, s.rows});
  };
  const BasisPtr basis = build_fock_basis(c.model.modes, c.model.particles);
  const PhasePoint start = c.initial.point(c.model.modes);
  const std::vector<double> times = c.sample_times();
  auto snapshot_index = [&](double t) -> int {
    for (std::size_t k = 0; k < c.snapshot_times.size(); ++k)
      if (std::abs(c.snapshot_times[k] - t) <= 1e-12) return static_cast<int>(k);
    return -1;
  };

  if (c.has("exact")) {
    PropagationConfig pc;
    pc.t_start = 0.0;
    pc.t_end = c.t_end;
    pc.sample_times = times;
    pc.rtol = c.rtol;
    pc.atol = c.atol;
    const QuantumState psi0 = coherent_state(basis, start);
    std::vector<std::pair<int, HusimiGrid>> grids;
    ObservableSeries series;
    if (c.model.gamma1 > 0.0) {
      auto obs = [&](double t, const DensityMatrix& d) {
        const int k = snapshot_index(t);
        if (k >= 0 && c.model.modes == 2) grids.emplace_back(k, husimi_grid(d, c.grid, c.workers));
      };
      series = evolve_master(c.model, DensityMatrix::pure(psi0), pc, obs).series;
    } else {
      auto obs = [&](double t, const QuantumState& s) {
        const int k = snapshot_index(t);
        if (k >= 0 && c.model.modes == 2) grids.emplace_back(k, husimi_grid(s, c.grid, c.workers));
      };
      series = evolve_schrodinger(c.model, psi0, pc, obs).series;
    }
    emit_series("exact.csv", series, detail::base_metadata(c, "exact observables"));
    for (const auto& [k, g] : grids) {
      Metadata m = detail::base_metadata(c, "exact husimi");
      m.emplace_back("t", format_double(c.snapshot_times[static_cast<std::size_t>(k)]));
      emit("exact_husimi_" + std::to_string(k) + ".csv", grid_table(g, m));
    }
  }

  if (c.has("meanfield")) {
    const Ordering ord = c.ensembles.empty() ? Ordering::Q : c.ensembles.front().cfg.ordering;
    const ClassicalSpec cs = ClassicalSpec::from_model(c.model, ord);
    TrajectoryConfig tc;
    tc.sample_times = times;
    const Trajectory tr = integrate_trajectory(cs, start, tc);
    ObservableSeries s = tr.to_series();
    if (c.model.modes == 2) {
      ObservableSeries b({"t", "p", "q", "energy", "sx", "sy", "sz", "s_norm"});
      for (std::size_t k = 0; k < tr.times.size(); ++k) {
        const auto v = tr.points[k].bloch();
        b.add_row({tr.times[k], tr.points[k].p(), tr.points[k].q(), tr.energies[k], v[0], v[1], v[2], vector_norm(v)});
      }
      s = b;
    }
    Metadata m = detail::base_metadata(c, "mean-field trajectory");
    m.emplace_back("g", format_double(cs.g));
    emit_series("meanfield.csv", s, m);
  }

  if (c.has("ensemble")) {
    for (const auto& run : c.ensembles) {
      EnsembleConfig cfg = run.cfg;
      cfg.workers = c.workers;
      Ensemble ens = run.cfg.sampler == SamplerKind::GlauberHusimi
                         ? sample_glauber_husimi(start, c.model.particles, cfg.count, cfg.seed, run.amplitude_noise)
                         : sample(run.cfg.sampler, start, c.model.particles, cfg.count, cfg.seed);
      const Snapshots snap = propagate_ensemble(c.model, ens, times, cfg);
      Metadata m = detail::base_metadata(c, "ensemble observables");
      m.emplace_back("sampler", to_string(cfg.sampler));
      m.emplace_back("ordering", to_string(cfg.ordering));
      m.emplace_back("count", std::to_string(cfg.count));
      m.emplace_back("seed", std::to_string(cfg.seed));
      m.emplace_back("failed", std::to_string(snap.failed.size()));
      if (c.model.modes == 2) {
        const ObservableSeries b = ensemble_bloch(snap);
        const ObservableSeries coh = coherence_series(snap);
        ObservableSeries all({"t", "jx", "jy", "jz", "bloch_norm", "jx_err", "jy_err", "jz_err", "lambda_max", "lambda_min",
                              "alpha", "alpha_err", "var_jz"});
        for (std::size_t k = 0; k < b.size(); ++k) {
          std::vector<double> row = b.rows[k];
          const double r = b.at(k, "bloch_norm");
          row.insert(row.end(), {0.5 + r, 0.5 - r, coh.at(k, "alpha"), coh.at(k, "alpha_err"), coh.at(k, "var_jz")});
          all.add_row(row);
        }
        emit_series("ensemble_" + run.label + ".csv", all, m);
      } else {
        const ObservableSeries sp = ensemble_spdm(snap);
        ObservableSeries all({"t", "n1", "n2", "n3", "lambda1", "lambda2", "lambda3", "trace"});
        for (std::size_t k = 0; k < sp.size(); ++k) {
          const CMatrix cm = ensemble_correlation(snap.points[k], 3, snap.particles, snap.kind, false);
          all.add_row({sp.at(k, "t"), cm(0, 0).real(), cm(1, 1).real(), cm(2, 2).real(), sp.at(k, "lambda1"), sp.at(k, "lambda2"),
                       sp.at(k, "lambda3"), sp.at(k, "trace")});
        }
        emit_series("ensemble_" + run.label + ".csv", all, m);
      }
      if (!c.snapshot_times.empty()) {
        Table t{m, {}, {}};
        t.metadata[1].second = "ensemble snapshots";
        t.columns = c.model.modes == 2 ? std::vector<std::string>{"t", "trajectory", "p", "q"}
                                       : std::vector<std::string>{"t", "trajectory", "p1", "p3", "q1", "q3"};
        for (std::size_t k = 0; k < times.size(); ++k) {
          if (snapshot_index(times[k]) < 0) continue;
          for (std::size_t i = 0; i < snap.points[k].size(); ++i) {
            const PhasePoint& pt = snap.points[k][i];
            if (c.model.modes == 2) {
              t.rows.push_back({times[k], static_cast<double>(i), pt.p(), pt.q()});
            } else {
              const Coords3 q = pt.coords3();
              t.rows.push_back({times[k], static_cast<double>(i), q.p1, q.p3, q.q1, q.q3});
            }
          }
        }
        emit("snapshots_" + run.label + ".csv", t);
      }
    }
  }

  if (c.has("husimi")) {
    require(c.model.modes == 2, "husimi task: requires two modes");
    std::optional<Eigensystem> eig;
    for (const auto& s : c.states)
      if (s.type == "eigen" && !eig) eig = eigenstates(c.model, basis);
    for (const auto& s : c.states) {
      Metadata m = detail::base_metadata(c, "husimi " + s.type);
      HusimiGrid g;
      std::optional<QuantumState> pure;
      if (s.type == "mixed") {
        const QuantumState a = coherent_state(basis, PhasePoint::from_pq(s.p, s.q));
        const QuantumState b = coherent_state(basis, PhasePoint::from_pq(s.p_b, s.q_b));
        CMatrix v(basis->dim(), 2);
        v.col(0) = a.amp / std::sqrt(2.0);
        v.col(1) = b.amp / std::sqrt(2.0);
        g = husimi_grid_sum(basis, v, c.grid, c.workers);
      } else {
        pure = detail::build_husimi_state(c, s, basis, eig ? &*eig : nullptr);
        g = husimi_grid(*pure, c.grid, c.workers);
      }
      emit("husimi_" + s.label + ".csv", grid_table(g, m));
      if (pure) {
        const HusimiZeros z = husimi_zeros(*pure);
        Table tz{detail::base_metadata(c, "husimi zeros"), {"p", "q"}, {}};
        tz.metadata.emplace_back("at_infinity", std::to_string(z.at_infinity));
        for (const auto& pt : z.points()) tz.rows.push_back({pt.p(), pt.q()});
        std::sort(tz.rows.begin(), tz.rows.end());
        emit("zeros_" + s.label + ".csv", tz);
      }
    }
  }

  if (c.has("contours")) {
    require(c.model.modes == 2, "contours task: requires two modes");
    std::vector<double> gs = c.contour_g;
    if (gs.empty()) gs.push_back(c.model.u * c.model.particles);
    for (std::size_t k = 0; k < gs.size(); ++k) {
      ClassicalSpec cs = ClassicalSpec::from_model(c.model);
      cs.g = gs[k];
      Metadata m = detail::base_metadata(c, "classical energy");
      m.emplace_back("g", format_double(cs.g));
      Table t{m, {"p", "q", "H"}, {}};
      for (int i = 0; i < c.contour_np; ++i)
        for (int j = 0; j < c.contour_nq; ++j) {
          const double p = static_cast<double>(i) / (c.contour_np - 1), q = kTwoPi * j / c.contour_nq;
          t.rows.push_back({p, q, classical_energy_pq(cs, p, q)});
        }
      emit("energy_" + std::to_string(k) + ".csv", t);
      Table f{m, {"p", "q", "elliptic", "lambda2"}, {}};
      f.metadata[1].second = "fixed points";
      for (const auto& fp : find_fixed_points_2mode(cs))
        f.rows.push_back({fp.p, fp.q, fp.stability == Stability::Elliptic ? 1.0 : 0.0, fp.lambda2});
      emit("fixed_points_" + std::to_string(k) + ".csv", f);
    }
  }

  if (c.has("poincare") || c.has("spectrum")) {
    require(c.model.modes == 3, "poincare task: requires three modes");
    const ClassicalSpec cs = ClassicalSpec::from_model(c.model);
    std::vector<PhasePoint> starts;
    for (const auto& s : c.section_starts) {
      const auto pt = section_point(cs, c.section_energy, s[0], s[1]);
      if (pt) starts.push_back(*pt);
    }
    if (c.has("poincare")) {
      SectionOptions opt;
      opt.t_max = c.section_t_max;
      const SectionData d = poincare_section_3mode(cs, starts, c.section_energy, opt, c.workers);
      Metadata m = detail::base_metadata(c, "poincare section q1=0");
      m.emplace_back("energy", format_double(d.energy));
      m.emplace_back("g", format_double(cs.g));
      m.emplace_back("branch_rule", "smaller p1");
      m.emplace_back("discarded_larger_branch", std::to_string(d.discarded_larger_branch));
      m.emplace_back("trajectories", std::to_string(starts.size()));
      Table t{m, {"trajectory", "t", "p3", "q3", "p1", "energy", "two_roots"}, {}};
      for (const auto& r : d.records)
        t.rows.push_back({static_cast<double>(r.trajectory), r.t, r.p3, r.q3, r.p1, r.energy, r.two_roots ? 1.0 : 0.0});
      emit("poincare.csv", t);
    }
    if (c.has("spectrum")) {
      require(!starts.empty(), "spectrum task: no valid section start");
      TrajectoryConfig tc;
      tc.sample_times = linspace(0.0, c.spectrum_t_end, c.spectrum_intervals);
      const Trajectory tr = integrate_trajectory(cs, starts.front(), tc);
      std::vector<double> p3;
      ObservableSeries ts({"t", "p3"});
      for (std::size_t k = 0; k < tr.times.size(); ++k) {
        p3.push_back(tr.points[k].population(2));
        ts.add_row({tr.times[k], p3.back()});
      }
      emit_series("timeseries_p3.csv", ts, detail::base_metadata(c, "p3(t)"));
      // drop the mean so the zero bin does not dominate
      double mean = 0.0;
      for (double v : p3) mean += v;
      mean /= static_cast<double>(p3.size());
      for (double& v : p3) v -= mean;
      const PowerSpectrum ps = power_spectrum(tr.times, p3, c.hann);
      Metadata m = detail::base_metadata(c, "power spectrum of p3 - mean");
      m.emplace_back("window", c.hann ? "hann" : "none");
      Table t{m, {"frequency", "power"}, {}};
      for (std::size_t k = 0; k < ps.power.size(); ++k) t.rows.push_back({ps.frequency[k], ps.power[k]});
      emit("spectrum_p3.csv", t);
    }
  }

  if (c.has("strobo")) {
    const ClassicalSpec cs = ClassicalSpec::from_model(c.model);
    std::vector<PhasePoint> starts;
    for (const auto& s : c.strobe_starts) starts.push_back(PhasePoint::from_pq(s[0], s[1]));
    const auto maps = stroboscopic_map(cs, starts, c.strobe_periods, c.workers);
    Metadata m = detail::base_metadata(c, "stroboscopic map");
    m.emplace_back("g", format_double(cs.g));
    Table t{m, {"trajectory", "k", "p", "q"}, {}};
    for (std::size_t i = 0; i < maps.size(); ++i)
      for (std::size_t k = 0; k < maps[i].size(); ++k)
        t.rows.push_back({static_cast<double>(i), static_cast<double>(k), maps[i][k].first, wrap_angle(maps[i][k].second)});
    emit("strobo.csv", t);
  }

  if (c.has("floquet")) {
    FloquetOptions fo;
    fo.workers = c.workers;
    const FloquetResult fr = floquet_states(c.model, basis, fo);
    const OperatorMatrix n2 = number_operator(basis, 1);
    Table q{detail::base_metadata(c, "floquet quasi-energies"), {"index", "quasi_energy", "multiplier_abs", "n2"}, {}};
    q.metadata.emplace_back("unitarity_error", format_double(fr.unitarity_error()));
    for (int k = 0; k < basis->dim(); ++k) {
      const QuantumState s{basis, fr.states.col(k)};
      q.rows.push_back({static_cast<double>(k), fr.quasi_energies[k], std::abs(fr.multipliers[k]),
                        expectation(n2, s).real() / c.model.particles});
    }
    emit("floquet.csv", q);
    for (int idx : c.floquet_states) {
      require(idx >= 0 && idx < basis->dim(), "floquet task: state index out of range");
      const QuantumState s{basis, fr.states.col(idx)};
      Metadata m = detail::base_metadata(c, "floquet state husimi");
      m.emplace_back("index", std::to_string(idx));
      m.emplace_back("quasi_energy", format_double(fr.quasi_energies[idx]));
      emit("floquet_husimi_" + std::to_string(idx) + ".csv", grid_table(husimi_grid(s, c.grid, c.workers), m));
    }
  }

  json manifest;
  manifest["version"] = kVersion;
  manifest["scenario"] = c.name;
  json cfg = c;
  manifest["config"] = cfg;
  manifest["config_hash"] = hex64(fnv1a64(cfg.dump()));
  json seeds = json::array();
  for (const auto& e : c.ensembles) seeds.push_back({{"label", e.label}, {"seed", e.cfg.seed}});
  manifest["seeds"] = seeds;
  json files = json::array();
  for (const auto& f : out.files) {
    const std::string bytes = read_text(out.directory / f);
    files.push_back({{"path", f}, {"fnv1a64", hex64(fnv1a64(bytes))}, {"bytes", bytes.size()}});
  }
  manifest["files"] = files;
  out.manifest = out.directory / "manifest.json";
  write_text(out.manifest, manifest.dump(2) + "\n");
  return out;
}

/// Scenario configuration stored in a manifest.
inline ScenarioConfig config_from_manifest(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& ex) {
    throw InvalidArgument("manifest '" + path.string() + "': " + ex.what());
  }
  if (!j.contains("config")) throw InvalidArgument("manifest '" + path.string() + "': missing 'config'");
  return j.at("config").get<ScenarioConfig>();
}

/// Files whose checksum differs from the manifest entry (missing files included).
inline std::vector<std::string> verify_manifest(const fs::path& path) {
  const json j = json::parse(read_text(path));
  const fs::path dir = path.parent_path();
  std::vector<std::string> bad;
  for (const auto& f : j.at("files")) {
    const std::string name = f.at("path").get<std::string>();
    std::error_code ec;
    if (!fs::exists(dir / name, ec) || file_checksum(dir / name) != f.at("fnv1a64").get<std::string>()) bad.push_back(name);
  }
  return bad;
}

}  // namespace bhps
