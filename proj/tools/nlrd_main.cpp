// Command-line driver for the local, nonlocal and particle reaction-diffusion models.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "nlrd/config.hpp"
#include "nlrd/experiments.hpp"
#include "nlrd/report_io.hpp"

namespace {

using namespace nlrd;

struct CommonOptions {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<double> dt, final_time, epsilon, gamma;
  std::optional<std::size_t> runs;
  std::optional<int> grid_points;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON experiment config (defaults if omitted)");
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--dt", o.dt, "time step");
  cmd->add_option("--final-time", o.final_time, "final time");
  cmd->add_option("--epsilon", o.epsilon, "interaction width");
  cmd->add_option("--gamma", o.gamma, "system size");
  cmd->add_option("--runs", o.runs, "particle runs");
  cmd->add_option("--grid-points", o.grid_points, "points per axis");
}

ExperimentConfig resolve(const CommonOptions& o, bool convergence) {
  ExperimentConfig c = o.config.empty() ? default_config(1) : parse_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (o.dt) c.dt = *o.dt;
  if (o.final_time) c.final_time = *o.final_time;
  if (o.epsilon) c.epsilon = *o.epsilon;
  if (o.gamma) c.gamma = *o.gamma;
  if (o.runs) c.runs = *o.runs;
  if (o.grid_points) c.grid_points = *o.grid_points;
  validate_config(c, convergence);
  return c;
}

std::vector<std::string> species_names(const ExperimentConfig& c) {
  std::vector<std::string> out;
  const ReactionNetwork net = network_factory(c)(c.epsilon);
  for (const auto& s : net.species()) out.push_back(s.name);
  return out;
}

template <class Writer>
void write_csv(OutputSet& outputs, const std::string& name, Writer&& writer) {
  std::ostringstream os;
  writer(os);
  write_file(outputs.path(name), os.str());
}

void write_manifest(OutputSet& outputs, const ExperimentConfig& c, const std::string& command) {
  write_file(outputs.path("manifest.json"), config_manifest(c, command));
}

int run_deterministic(const CommonOptions& o, DeterministicModel model) {
  const std::string command = model == DeterministicModel::Local ? "run-sm" : "run-mfm";
  const ExperimentConfig c = resolve(o, false);
  const PeriodicGrid grid = config_grid(c);
  const auto names = species_names(c);
  const auto saves = config_save_times(c);
  const auto profile_times = config_profile_times(c);
  std::vector<MassRow> masses;
  std::vector<double> ptimes;
  std::vector<std::vector<Field>> profiles;
  const std::string label = model == DeterministicModel::Local ? "SM" : "MFM";
  integrate(model, network_factory(c)(c.epsilon), grid, config_initial(c), c.dt, c.final_time,
            saves, [&](std::size_t, double t, const std::vector<Field>& f) {
              const auto m = molar_masses(f, grid);
              for (std::size_t j = 0; j < m.size(); ++j)
                masses.push_back({t, label, names[j], m[j], 0.0, false});
              if (std::find(profile_times.begin(), profile_times.end(), t) != profile_times.end()) {
                ptimes.push_back(t);
                profiles.push_back(f);
              }
            });
  OutputSet outputs(o.out);
  write_csv(outputs, "masses.csv", [&](std::ostream& os) { write_masses_csv(os, masses); });
  write_csv(outputs, "fields.csv",
            [&](std::ostream& os) { write_fields_csv(os, names, grid, ptimes, profiles); });
  write_manifest(outputs, c, command);
  outputs.commit();
  return 0;
}

int run_particle(const CommonOptions& o) {
  const ExperimentConfig c = resolve(o, false);
  const PeriodicGrid grid = config_grid(c);
  const auto names = species_names(c);
  const auto saves = config_save_times(c);
  const auto profile_times = config_profile_times(c);
  const EnsembleSummary e =
      run_pbsrd(network_factory(c)(c.epsilon), grid, config_initial(c), c.gamma, c.runs,
                c.final_time, saves, profile_times, c.seed, c.threads);
  std::vector<MassRow> masses;
  for (std::size_t s = 0; s < e.save_times.size(); ++s)
    for (std::size_t j = 0; j < names.size(); ++j)
      masses.push_back({e.save_times[s], "PBSRD", names[j], e.mean_masses[s][j],
                        e.stderr_masses[s][j], true});
  OutputSet outputs(o.out);
  write_csv(outputs, "masses.csv", [&](std::ostream& os) { write_masses_csv(os, masses); });
  write_csv(outputs, "fields.csv", [&](std::ostream& os) {
    write_fields_csv(os, names, grid, e.snapshot_times, e.mean_fields);
  });
  write_manifest(outputs, c, "run-pbsrd");
  outputs.commit();
  return 0;
}

int run_converge(const CommonOptions& o) {
  const ExperimentConfig c = resolve(o, true);
  ConvergenceSetup setup;
  setup.network = network_factory(c);
  setup.grid = config_grid(c);
  setup.initial = config_initial(c);
  setup.dt = c.dt;
  setup.final_time = c.final_time;
  setup.save_interval = c.save_interval;
  setup.epsilons = c.epsilons;
  setup.threads = c.threads;
  const ConvergenceReport report = convergence_study(setup);
  OutputSet outputs(o.out);
  write_csv(outputs, "convergence.csv",
            [&](std::ostream& os) { write_convergence_csv(os, report); });
  write_csv(outputs, "slopes.csv", [&](std::ostream& os) { write_slopes_csv(os, report); });
  write_manifest(outputs, c, "converge");
  outputs.commit();
  for (std::size_t j = 0; j < report.species.size(); ++j)
    std::cout << "slope " << report.species[j] << ' ' << format_number(report.slopes[j]) << '\n';
  return 0;
}

int run_compare(const CommonOptions& o) {
  const ExperimentConfig c = resolve(o, false);
  ComparisonSetup setup;
  setup.network = network_factory(c);
  setup.grid = config_grid(c);
  setup.initial = config_initial(c);
  setup.epsilon = c.epsilon;
  setup.dt = c.dt;
  setup.final_time = c.final_time;
  setup.save_times = config_save_times(c);
  setup.profile_times = config_profile_times(c);
  setup.gamma = c.gamma;
  setup.runs = c.runs;
  setup.seed = c.seed;
  setup.threads = c.threads;
  const ComparisonReport r = compare_models(setup);
  OutputSet outputs(o.out);
  write_csv(outputs, "masses.csv",
            [&](std::ostream& os) { write_masses_csv(os, comparison_mass_rows(r)); });
  write_csv(outputs, "profiles_sm.csv", [&](std::ostream& os) {
    write_fields_csv(os, r.species, setup.grid, r.profile_times, r.sm_profiles);
  });
  write_csv(outputs, "profiles_mfm.csv", [&](std::ostream& os) {
    write_fields_csv(os, r.species, setup.grid, r.profile_times, r.mfm_profiles);
  });
  write_csv(outputs, "profiles_pbsrd.csv", [&](std::ostream& os) {
    write_fields_csv(os, r.species, setup.grid, r.pbsrd.snapshot_times, r.pbsrd.mean_fields);
  });
  if (!std::isnan(r.ceq))
    write_csv(outputs, "equilibrium.csv",
              [&](std::ostream& os) { os << "species,ceq\nC," << format_number(r.ceq) << '\n'; });
  write_manifest(outputs, c, "compare");
  outputs.commit();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local, nonlocal and particle reaction-diffusion simulator"};
  app.require_subcommand(1);

  CommonOptions opts;
  auto* sm = app.add_subcommand("run-sm", "integrate the local model");
  auto* mfm = app.add_subcommand("run-mfm", "integrate the nonlocal mean-field model");
  auto* pbsrd = app.add_subcommand("run-pbsrd", "particle ensemble on the lattice");
  auto* converge = app.add_subcommand("converge", "epsilon convergence of nonlocal to local");
  auto* compare = app.add_subcommand("compare", "local, nonlocal and particle molar masses");
  for (auto* cmd : {sm, mfm, pbsrd, converge, compare}) add_common(cmd, opts);

  auto* eq = app.add_subcommand("equilibrium", "uniform equilibrium of A + B <-> C");
  std::optional<double> a0, b0, c0, kd;
  std::string eq_config;
  eq->add_option("--a0", a0, "mean A");
  eq->add_option("--b0", b0, "mean B");
  eq->add_option("--c0", c0, "mean C");
  eq->add_option("--kd", kd, "dissociation constant kappa2 / kappa1");
  eq->add_option("--config", eq_config, "take means and rates from a config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*sm) return run_deterministic(opts, DeterministicModel::Local);
    if (*mfm) return run_deterministic(opts, DeterministicModel::Nonlocal);
    if (*pbsrd) return run_particle(opts);
    if (*converge) return run_converge(opts);
    if (*compare) return run_compare(opts);
    if (*eq) {
      double a = 0, b = 0, c = 0, k = 0;
      if (!eq_config.empty()) {
        const ExperimentConfig cfg = parse_config(eq_config);
        if (cfg.network.preset != "reversible_abc")
          throw std::invalid_argument("equilibrium needs the reversible_abc preset");
        const auto m = spatial_means(config_initial(cfg), config_grid(cfg));
        a = m[0], b = m[1], c = m[2], k = cfg.network.kappa2 / cfg.network.kappa1;
      } else if (!a0 || !b0 || !kd) {
        std::cerr << "equilibrium: give --a0, --b0 and --kd (or --config)\n";
        return 2;
      }
      if (a0) a = *a0;
      if (b0) b = *b0;
      if (c0) c = *c0;
      if (kd) k = *kd;
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.12g", equilibrium_ceq(a, b, c, k));
      std::cout << buf << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
