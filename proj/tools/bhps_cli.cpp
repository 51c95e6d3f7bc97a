#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bhps/bhps.hpp"

namespace {

using namespace bhps;

struct Overrides {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> count;
  std::optional<int> workers;
  std::optional<double> t_end;
  std::string output;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("config", o.config, "scenario config file (JSON)");
  cmd->add_option("--preset", o.preset, "start from a named preset instead of a config file");
  cmd->add_option("--seed", o.seed, "master seed for every ensemble (run k uses seed + k)");
  cmd->add_option("--count", o.count, "trajectories per ensemble");
  cmd->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--t-end", o.t_end, "propagation end time")->check(CLI::PositiveNumber);
  cmd->add_option("-o,--output", o.output, "output directory");
}

ScenarioConfig resolve(const Overrides& o) {
  if (o.config.empty() == o.preset.empty()) throw InvalidArgument("give exactly one of a config path or --preset");
  ScenarioConfig c = o.preset.empty() ? load_scenario_config(o.config) : preset(o.preset);
  if (o.seed)
    for (std::size_t k = 0; k < c.ensembles.size(); ++k) c.ensembles[k].cfg.seed = *o.seed + k;
  if (o.count)
    for (auto& e : c.ensembles) e.cfg.count = *o.count;
  if (o.workers) {
    c.workers = *o.workers;
    for (auto& e : c.ensembles) e.cfg.workers = *o.workers;
  }
  if (o.t_end) {
    c.t_end = *o.t_end;
    std::erase_if(c.snapshot_times, [&](double t) { return t > c.t_end; });
  }
  if (!o.output.empty()) c.output_dir = o.output;
  return c;
}

void report(const ScenarioOutput& out) {
  for (const auto& f : out.files) std::cout << (out.directory / f).string() << "\n";
  std::cout << out.manifest.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bose-Hubbard phase-space toolkit"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    std::vector<std::string> tasks;
  };
  const std::vector<Command> commands{
      {"exact", "exact Schroedinger or master-equation propagation", {"exact"}},
      {"meanfield", "single mean-field trajectory", {"meanfield"}},
      {"ensemble", "sampled phase-space ensembles", {"ensemble"}},
      {"husimi", "Husimi grids, zeros and energy contours", {"husimi", "contours"}},
      {"poincare", "Poincare sections and spectra (three modes) or stroboscopic maps (driven dimer)", {}},
      {"floquet", "Floquet eigenstates of the driven dimer", {"floquet"}},
  };
  std::vector<Overrides> opts(commands.size());
  std::vector<CLI::App*> subs;
  for (std::size_t k = 0; k < commands.size(); ++k) {
    subs.push_back(app.add_subcommand(commands[k].name, commands[k].help));
    add_common(subs.back(), opts[k]);
  }

  Overrides scen;
  bool list = false;
  std::string manifest, verify;
  CLI::App* sc = app.add_subcommand("scenario", "run every task of a scenario");
  add_common(sc, scen);
  sc->add_flag("--list", list, "list presets");
  sc->add_option("--manifest", manifest, "rerun from a manifest.json");
  sc->add_option("--verify", verify, "check the files listed in a manifest against their checksums");

  CLI11_PARSE(app, argc, argv);

  try {
    for (std::size_t k = 0; k < commands.size(); ++k) {
      if (!subs[k]->parsed()) continue;
      std::vector<std::string> tasks = commands[k].tasks;
      ScenarioConfig c = resolve(opts[k]);
      if (tasks.empty()) {
        if (c.model.modes == 3)
          tasks = {"poincare", "spectrum"};
        else
          tasks = {"strobo"};
      }
      c.tasks = tasks;
      report(run_scenario(c));
      return 0;
    }
    if (list) {
      for (const auto& n : preset_names()) std::cout << n << "\n";
      return 0;
    }
    if (!verify.empty()) {
      const auto bad = verify_manifest(verify);
      for (const auto& f : bad) std::cerr << "mismatch: " << f << "\n";
      return bad.empty() ? 0 : 1;
    }
    if (!manifest.empty()) {
      ScenarioConfig c = config_from_manifest(manifest);
      if (!scen.output.empty()) c.output_dir = scen.output;
      if (scen.workers) {
        c.workers = *scen.workers;
        for (auto& e : c.ensembles) e.cfg.workers = *scen.workers;
      }
      report(run_scenario(c));
      return 0;
    }
    report(run_scenario(resolve(scen)));
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
