#include "nlrd/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "nlrd/rhs.hpp"

namespace nlrd {

unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<Field> sample_initial(const std::vector<SpeciesInitial>& spec,
                                  const PeriodicGrid& grid) {
  std::vector<Field> out;
  for (const auto& s : spec) {
    Field f(grid.size(), s.constant);
    for (std::size_t v = 0; v < f.size(); ++v) {
      const auto idx = grid.multi_index(v);
      for (const auto& b : s.bumps) {
        double arg = 0.0;
        for (int a = 0; a < grid.dimension; ++a) {
          const double d = grid.coordinate(idx[a]) - b.center[a];
          arg += b.rate[a] * d * d;
        }
        f[v] += b.amplitude * std::exp(-arg);
      }
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<SpeciesInitial> default_initial_1d() {
  return {{0.0, {{1.0, {1.0, 0.0}, {10.0, 0.0}}}},
          {0.0, {{1.0, {2.0, 0.0}, {10.0, 0.0}}}},
          {0.0, {}}};
}

std::vector<SpeciesInitial> default_initial_2d() {
  return {{0.0, {{1.0, {1.0, 2.0}, {12.0, 8.0}}}},
          {0.0, {{1.0, {1.0, 2.0}, {10.0, 5.0}}}},
          {0.0, {}}};
}

std::vector<double> save_schedule(double final_time, double interval, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("Δt must be positive");
  if (!(final_time > 0.0)) throw std::invalid_argument("final time must be positive");
  if (!(interval > 0.0)) throw std::invalid_argument("save interval must be positive");
  const long total = std::lround(final_time / dt);
  const long stride = std::max(1L, std::lround(interval / dt));
  std::vector<double> out;
  for (long s = 0; s < total; s += stride) out.push_back(static_cast<double>(s) * dt);
  out.push_back(static_cast<double>(total) * dt);
  return out;
}

namespace {

long steps_for(double t, double dt) {
  const double ratio = t / dt;
  const long s = std::lround(ratio);
  if (std::abs(ratio - static_cast<double>(s)) > 1e-6)
    throw std::invalid_argument("save time is not a multiple of Δt");
  return s;
}

std::vector<double> diffusivities(const ReactionNetwork& net) {
  std::vector<double> d;
  for (const auto& s : net.species()) d.push_back(s.diffusivity);
  return d;
}

std::vector<std::string> species_names(const ReactionNetwork& net) {
  std::vector<std::string> out;
  for (const auto& s : net.species()) out.push_back(s.name);
  return out;
}

RunMetadata metadata_for(const ReactionNetwork& net, const PeriodicGrid& grid, double dt,
                         double final_time) {
  RunMetadata m{grid, dt, final_time, "", ""};
  for (const auto& r : net.reactions()) {
    if (!r.kernel.is_separation_kernel()) continue;
    m.kernel = to_string(r.kernel.kind);
    m.placement = placement_name(r.placement);
    break;
  }
  return m;
}

// Kd for a network of the form A + B -> C, C -> A + B; NaN otherwise.
double dissociation_constant(const ReactionNetwork& net) {
  const auto& rs = net.reactions();
  if (net.species_count() != 3 || rs.size() != 2) return std::nan("");
  const std::vector<int> ab{1, 1, 0}, c{0, 0, 1};
  if (rs[0].reactant_stoich != ab || rs[0].product_stoich != c) return std::nan("");
  if (rs[1].reactant_stoich != c || rs[1].product_stoich != ab) return std::nan("");
  return rs[1].macroscopic_rate / rs[0].macroscopic_rate;
}

}  // namespace

void integrate(DeterministicModel model, const ReactionNetwork& net, const PeriodicGrid& grid,
               const std::vector<Field>& initial, double dt, double final_time,
               const std::vector<double>& save_times, const SaveObserver& observer) {
  if (!(dt > 0.0)) throw std::invalid_argument("Δt must be positive");
  if (!(final_time > 0.0)) throw std::invalid_argument("final time must be positive");
  const long total = steps_for(final_time, dt);
  std::vector<long> save_steps;
  for (double t : save_times) {
    const long s = steps_for(t, dt);
    if (s < 0 || s > total) throw std::invalid_argument("save time outside [0, T]");
    if (!save_steps.empty() && s <= save_steps.back())
      throw std::invalid_argument("save times must be strictly increasing");
    save_steps.push_back(s);
  }

  auto transform = std::make_shared<const FourierTransform>(grid);
  ReactionRhs rhs;
  std::shared_ptr<const CompiledMfmTerms> compiled;
  if (model == DeterministicModel::Local) {
    rhs = [&net](const std::vector<Field>& f, std::vector<Field>& out) { sm_rhs(net, f, out); };
  } else {
    compiled = std::make_shared<const CompiledMfmTerms>(net, grid, transform);
    rhs = [compiled](const std::vector<Field>& f, std::vector<Field>& out) {
      mfm_rhs(*compiled, f, out);
    };
  }

  std::size_t next = 0;
  auto observe = [&](long step, const std::vector<Field>& fields) {
    while (next < save_steps.size() && save_steps[next] == step) {
      observer(next, save_times[next], fields);
      ++next;
    }
  };
  observe(0, initial);
  ImexIntegrator integrator(transform, diffusivities(net), dt);
  StepperState state = integrator.bootstrap(initial, rhs);
  observe(state.step, state.fields);
  while (state.step < total) {
    integrator.step(state, rhs);
    observe(state.step, state.fields);
  }
}

namespace {

DeterministicTrajectory run_deterministic(DeterministicModel model, const ReactionNetwork& net,
                                          const PeriodicGrid& grid,
                                          const std::vector<Field>& initial, double dt,
                                          double final_time,
                                          const std::vector<double>& save_times) {
  DeterministicTrajectory traj;
  traj.grid = grid;
  integrate(model, net, grid, initial, dt, final_time, save_times,
            [&](std::size_t, double t, const std::vector<Field>& f) {
              traj.times.push_back(t);
              traj.fields.push_back(f);
            });
  return traj;
}

}  // namespace

DeterministicTrajectory run_sm(const ReactionNetwork& net, const PeriodicGrid& grid,
                               const std::vector<Field>& initial, double dt, double final_time,
                               const std::vector<double>& save_times) {
  return run_deterministic(DeterministicModel::Local, net, grid, initial, dt, final_time,
                           save_times);
}

DeterministicTrajectory run_mfm(const ReactionNetwork& net, const PeriodicGrid& grid,
                                const std::vector<Field>& initial, double dt, double final_time,
                                const std::vector<double>& save_times) {
  return run_deterministic(DeterministicModel::Nonlocal, net, grid, initial, dt, final_time,
                           save_times);
}

std::vector<double> linf_error(const DeterministicTrajectory& a, const DeterministicTrajectory& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("mismatched grids");
  if (a.times != b.times) throw std::invalid_argument("mismatched save times");
  std::vector<double> err;
  for (std::size_t s = 0; s < a.fields.size(); ++s) {
    if (a.fields[s].size() != b.fields[s].size())
      throw std::invalid_argument("mismatched species counts");
    err.resize(a.fields[s].size(), 0.0);
    for (std::size_t j = 0; j < a.fields[s].size(); ++j)
      for (std::size_t i = 0; i < a.fields[s][j].size(); ++i)
        err[j] = std::max(err[j], std::abs(a.fields[s][j][i] - b.fields[s][j][i]));
  }
  return err;
}

double fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("insufficient points");
  double sx = 0.0, sy = 0.0;
  for (const auto& [e, err] : points) {
    if (!(e > 0.0) || !(err > 0.0)) throw std::invalid_argument("nonpositive inputs");
    sx += std::log(e);
    sy += std::log(err);
  }
  const double n = static_cast<double>(points.size());
  const double mx = sx / n, my = sy / n;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [e, err] : points) {
    const double dx = std::log(e) - mx;
    sxy += dx * (std::log(err) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw std::invalid_argument("epsilon values must differ");
  return sxy / sxx;
}

double equilibrium_ceq(double a0, double b0, double c0, double kd) {
  if (a0 < 0.0 || b0 < 0.0 || c0 < 0.0 || kd < 0.0)
    throw std::invalid_argument("equilibrium inputs must be nonnegative");
  const double sum = a0 + b0 + 2.0 * c0;
  const double diff = b0 - a0;
  const double disc = (sum + kd) * (sum + kd) - (sum * sum - diff * diff);
  if (disc < 0.0) throw std::domain_error("negative discriminant");
  return 0.5 * (sum + kd - std::sqrt(disc));
}

ConvergenceReport convergence_study(const ConvergenceSetup& setup) {
  if (setup.epsilons.size() < 3) throw std::invalid_argument("insufficient points");
  std::vector<double> eps = setup.epsilons;
  std::sort(eps.begin(), eps.end(), std::greater<>());
  if (std::adjacent_find(eps.begin(), eps.end()) != eps.end())
    throw std::invalid_argument("epsilon values must be distinct");
  if (eps.back() < 4.0 * setup.grid.spacing() * (1.0 - 1e-12))
    throw std::invalid_argument("ε below 4h guard");

  const auto saves = save_schedule(setup.final_time, setup.save_interval, setup.dt);
  const ReactionNetwork reference_net = setup.network(eps.front());
  const DeterministicTrajectory sm =
      run_sm(reference_net, setup.grid, setup.initial, setup.dt, setup.final_time, saves);

  ConvergenceReport report;
  report.species = species_names(reference_net);
  report.epsilons = eps;
  report.metadata = metadata_for(reference_net, setup.grid, setup.dt, setup.final_time);
  report.errors.assign(eps.size(), std::vector<double>(report.species.size(), 0.0));
  parallel_for(eps.size(), setup.threads, [&](std::size_t k) {
    const ReactionNetwork net = setup.network(eps[k]);
    auto& err = report.errors[k];
    integrate(DeterministicModel::Nonlocal, net, setup.grid, setup.initial, setup.dt,
              setup.final_time, saves, [&](std::size_t s, double, const std::vector<Field>& f) {
                for (std::size_t j = 0; j < f.size(); ++j)
                  for (std::size_t i = 0; i < f[j].size(); ++i)
                    err[j] = std::max(err[j], std::abs(f[j][i] - sm.fields[s][j][i]));
              });
  });
  for (std::size_t j = 0; j < report.species.size(); ++j) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < eps.size(); ++k) pts.emplace_back(eps[k], report.errors[k][j]);
    report.slopes.push_back(fit_loglog_slope(pts));
  }
  return report;
}

std::vector<double> molar_masses(const std::vector<Field>& fields, const PeriodicGrid& grid) {
  std::vector<double> out;
  for (const auto& f : fields) out.push_back(field_integral(f, grid));
  return out;
}

std::vector<double> spatial_means(const std::vector<Field>& fields, const PeriodicGrid& grid) {
  const double volume = std::pow(grid.length, grid.dimension);
  std::vector<double> out;
  for (const auto& f : fields) out.push_back(field_integral(f, grid) / volume);
  return out;
}

EnsembleSummary run_pbsrd(const ReactionNetwork& net, const PeriodicGrid& grid,
                          const std::vector<Field>& initial, double gamma, std::size_t runs,
                          double final_time, const std::vector<double>& save_times,
                          const std::vector<double>& profile_times, std::uint64_t seed,
                          unsigned threads) {
  if (runs == 0) throw std::invalid_argument("number of runs must be positive");
  const CrdmeProcess process = build_crdme(net, grid, gamma);
  std::vector<Trajectory> trajectories(runs);
  parallel_for(runs, threads, [&](std::size_t r) {
    const std::uint64_t run_seed = derive_seed(seed, r);
    const LatticeState init =
        sample_initial_counts(initial, gamma, grid, derive_seed(run_seed, 0));
    trajectories[r] = ssa_run(process, init, final_time, save_times, derive_seed(run_seed, 1),
                              profile_times);
  });
  return ensemble_mean(trajectories, gamma);
}

ComparisonReport compare_models(const ComparisonSetup& setup) {
  const ReactionNetwork net = setup.network(setup.epsilon);
  ComparisonReport report;
  report.species = species_names(net);
  report.save_times = setup.save_times;
  report.profile_times = setup.profile_times;
  report.metadata = metadata_for(net, setup.grid, setup.dt, setup.final_time);

  for (double t : setup.profile_times)
    if (std::find(setup.save_times.begin(), setup.save_times.end(), t) == setup.save_times.end())
      throw std::invalid_argument("profile times must be save times");

  auto collect = [&](DeterministicModel model, std::vector<std::vector<double>>& masses,
                     std::vector<std::vector<Field>>& profiles) {
    integrate(model, net, setup.grid, setup.initial, setup.dt, setup.final_time,
              setup.save_times, [&](std::size_t, double t, const std::vector<Field>& f) {
                masses.push_back(molar_masses(f, setup.grid));
                if (std::find(setup.profile_times.begin(), setup.profile_times.end(), t) !=
                    setup.profile_times.end())
                  profiles.push_back(f);
              });
  };
  collect(DeterministicModel::Local, report.sm_masses, report.sm_profiles);
  collect(DeterministicModel::Nonlocal, report.mfm_masses, report.mfm_profiles);
  report.pbsrd = run_pbsrd(net, setup.grid, setup.initial, setup.gamma, setup.runs,
                           setup.final_time, setup.save_times, setup.profile_times, setup.seed,
                           setup.threads);

  const double kd = dissociation_constant(net);
  if (std::isnan(kd)) {
    report.ceq = kd;
  } else {
    const auto m = spatial_means(setup.initial, setup.grid);
    report.ceq = equilibrium_ceq(m[0], m[1], m[2], kd);
  }
  return report;
}

}  // namespace nlrd
