#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "nlrd/grid.hpp"
#include "nlrd/network.hpp"
#include "nlrd/particle.hpp"
#include "nlrd/spectral.hpp"

namespace nlrd {

/// Runs fn(0..count-1) on up to `threads` workers. Callers write results by
/// index, so output does not depend on scheduling.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

/// Default worker count (hardware concurrency, at least 1).
unsigned default_threads();

/// Builds the network for a given interaction width.
using NetworkFactory = std::function<ReactionNetwork(double epsilon)>;

/// Initial data: per species, a constant plus Gaussian bumps
/// amplitude * exp(-sum_a rate_a (x_a - center_a)^2).
struct GaussianBump {
  double amplitude = 1.0;
  std::array<double, 2> center{0.0, 0.0};
  std::array<double, 2> rate{1.0, 1.0};
};
struct SpeciesInitial {
  double constant = 0.0;
  std::vector<GaussianBump> bumps;
};
std::vector<Field> sample_initial(const std::vector<SpeciesInitial>& spec, const PeriodicGrid& grid);

/// The reversible A + B <-> C studies: 1d bumps at x = 1 and x = 2; 2d
/// anisotropic bumps. C starts empty.
std::vector<SpeciesInitial> default_initial_1d();
std::vector<SpeciesInitial> default_initial_2d();

/// Save times k * interval (rounded to whole steps) in [0, final_time],
/// always including final_time.
std::vector<double> save_schedule(double final_time, double interval, double dt);

struct DeterministicTrajectory {
  PeriodicGrid grid;
  std::vector<double> times;
  std::vector<std::vector<Field>> fields;  // [save][species]
};

/// Called at every save time with the current fields.
using SaveObserver = std::function<void(std::size_t save_index, double time,
                                        const std::vector<Field>& fields)>;

enum class DeterministicModel { Local, Nonlocal };

/// Integrates the local (SM) or nonlocal (MFM) model with the IMEX stepper,
/// calling `observer` at each save time. Save times must be multiples of dt.
void integrate(DeterministicModel model, const ReactionNetwork& net, const PeriodicGrid& grid,
               const std::vector<Field>& initial, double dt, double final_time,
               const std::vector<double>& save_times, const SaveObserver& observer);

DeterministicTrajectory run_sm(const ReactionNetwork& net, const PeriodicGrid& grid,
                               const std::vector<Field>& initial, double dt, double final_time,
                               const std::vector<double>& save_times);
DeterministicTrajectory run_mfm(const ReactionNetwork& net, const PeriodicGrid& grid,
                                const std::vector<Field>& initial, double dt, double final_time,
                                const std::vector<double>& save_times);

/// Max over save times and grid points of |a - b|, per species.
std::vector<double> linf_error(const DeterministicTrajectory& a, const DeterministicTrajectory& b);

/// Least-squares slope of log(error) against log(epsilon). Needs >= 3 points.
double fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

/// Uniform equilibrium of A + B <-> C with dissociation constant kd.
double equilibrium_ceq(double a0, double b0, double c0, double kd);

struct RunMetadata {
  PeriodicGrid grid;
  double dt = 0.0;
  double final_time = 0.0;
  std::string kernel;
  std::string placement;
};

struct ConvergenceReport {
  std::vector<std::string> species;
  std::vector<double> epsilons;              // strictly decreasing
  std::vector<std::vector<double>> errors;   // [epsilon][species]
  std::vector<double> slopes;                // per species
  RunMetadata metadata;
};

struct ConvergenceSetup {
  NetworkFactory network;
  PeriodicGrid grid;
  std::vector<Field> initial;
  double dt = 1e-3;
  double final_time = 1.0;
  double save_interval = 0.01;
  std::vector<double> epsilons;
  unsigned threads = 1;
};

/// Solves SM once and MFM per epsilon, reporting sup-space-time errors and
/// fitted slopes. Requires min epsilon >= 4h and at least three widths.
ConvergenceReport convergence_study(const ConvergenceSetup& setup);

struct ComparisonSetup {
  NetworkFactory network;
  PeriodicGrid grid;
  std::vector<Field> initial;
  double epsilon = 0.0;
  double dt = 1e-3;
  double final_time = 1.0;
  std::vector<double> save_times;
  std::vector<double> profile_times;
  double gamma = 1e4;
  std::size_t runs = 100;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct ComparisonReport {
  std::vector<std::string> species;
  std::vector<double> save_times;
  std::vector<std::vector<double>> sm_masses;   // [save][species]
  std::vector<std::vector<double>> mfm_masses;  // [save][species]
  EnsembleSummary pbsrd;
  std::vector<double> profile_times;
  std::vector<std::vector<Field>> sm_profiles;   // [profile][species]
  std::vector<std::vector<Field>> mfm_profiles;  // [profile][species]
  double ceq = 0.0;  // NaN unless the network is the reversible A + B <-> C preset
  RunMetadata metadata;
};

/// Particle ensemble. Run r draws its initial counts and its trajectory from
/// two streams derived from derive_seed(seed, r).
EnsembleSummary run_pbsrd(const ReactionNetwork& net, const PeriodicGrid& grid,
                          const std::vector<Field>& initial, double gamma, std::size_t runs,
                          double final_time, const std::vector<double>& save_times,
                          const std::vector<double>& profile_times, std::uint64_t seed,
                          unsigned threads);

ComparisonReport compare_models(const ComparisonSetup& setup);

/// Molar masses h^d sum rho_j per species.
std::vector<double> molar_masses(const std::vector<Field>& fields, const PeriodicGrid& grid);

/// Spatial means of each species' field.
std::vector<double> spatial_means(const std::vector<Field>& fields, const PeriodicGrid& grid);

}  // namespace nlrd
