#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "nlrd/grid.hpp"
#include "nlrd/kernels.hpp"
#include "nlrd/network.hpp"

namespace nlrd {

/// Trajectory random stream: std::mt19937_64 seeded through SplitMix64.
/// Samplers are implemented here (not via <random> distributions) so that a
/// seed yields the same stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Exp(1).
  double exponential();
  std::int64_t poisson(double mean);
  bool bernoulli(double p) { return uniform() < p; }
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
/// Independent per-run seed derived from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

struct LatticeState {
  PeriodicGrid grid;
  std::vector<std::vector<std::int64_t>> counts;  // [species][voxel]
  double time = 0.0;

  std::int64_t total(int species) const;
};

/// Bimolecular channel table: an anchor particle (reactant 0) at voxel v and
/// a partner (reactant 1) at v + o react at rate coefficient[o] per pair.
struct PairTable {
  int anchor = 0;
  int partner = 0;
  bool self = false;
  std::vector<Offset> offsets;
  std::vector<double> coefficients;  // K(o) / gamma
  Placement placement;
};

struct UnimolecularTable {
  int reactant = 0;
  double rate = 0.0;
  Placement placement;
};

/// Discrete placement law for dissociation products.
struct SeparationSampler {
  std::vector<Offset> offsets;
  std::vector<double> cumulative;  // ends at 1
  std::vector<Center> centers;
  Offset sample(Rng& rng) const;
};

/// Lattice jump process for the particle model at system size gamma.
struct CrdmeProcess {
  PeriodicGrid grid;
  double gamma = 0.0;
  std::vector<double> hop_rates;  // D_j / h^2 per direction
  std::vector<PairTable> pair_reactions;
  std::vector<UnimolecularTable> unimolecular_reactions;
  std::vector<std::vector<int>> pair_products;  // ordered product species per pair reaction
  std::vector<std::vector<int>> uni_products;
  std::vector<SeparationSampler> uni_separation;  // per unimolecular reaction (dissociation)
  int species_count = 0;
};

/// Hop rates D_j / h^2; pair rate coefficient K_hat(o) / gamma from the
/// cell-averaged discretised kernel (so sum_o c(o) gamma h^d = k_l);
/// unimolecular rate k_l per particle.
CrdmeProcess build_crdme(const ReactionNetwork& net, const PeriodicGrid& grid, double gamma);

/// Independent Poisson counts with mean gamma * rho_j(x_v) * h^d.
LatticeState sample_initial_counts(const std::vector<Field>& fields, double gamma,
                                   const PeriodicGrid& grid, std::uint64_t seed);

struct Trajectory {
  std::vector<double> save_times;
  std::vector<double> snapshot_times;  // subset of save_times with a stored lattice state
  std::vector<LatticeState> snapshots;
  std::vector<std::vector<double>> molar_masses;  // [save][species] = count / gamma
  std::uint64_t seed = 0;
  std::uint64_t event_count = 0;
};

/// Gibson-Bruck next-reaction simulation up to `final_time`, recording the
/// molar masses at each save time and the full lattice state at each save time
/// listed in `snapshot_times`. Deterministic for a given seed.
Trajectory ssa_run(const CrdmeProcess& process, const LatticeState& initial, double final_time,
                   const std::vector<double>& save_times, std::uint64_t seed,
                   const std::vector<double>& snapshot_times);
/// As above, storing the lattice state at every save time.
Trajectory ssa_run(const CrdmeProcess& process, const LatticeState& initial, double final_time,
                   const std::vector<double>& save_times, std::uint64_t seed);

/// count / (gamma h^d) per voxel.
GridField empirical_fields(const LatticeState& state, double gamma);

struct EnsembleSummary {
  std::vector<double> save_times;
  std::vector<std::vector<double>> mean_masses;    // [save][species]
  std::vector<std::vector<double>> stderr_masses;  // [save][species]
  std::vector<double> snapshot_times;
  std::vector<std::vector<Field>> mean_fields;     // [snapshot][species]
  std::size_t runs = 0;
};

/// Arithmetic means over runs (accumulated in run order) with standard errors.
EnsembleSummary ensemble_mean(const std::vector<Trajectory>& trajectories, double gamma);

}  // namespace nlrd
