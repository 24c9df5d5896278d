#include "nlrd/particle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nlrd {

// ---------------------------------------------------------------------------
// Random numbers

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

Rng::Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::exponential() { return -std::log1p(-uniform()); }

std::int64_t Rng::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  if (mean > 256.0) {
    const double half = 0.5 * mean;
    return poisson(half) + poisson(mean - half);
  }
  // Sequential inversion.
  const double u = uniform();
  double p = std::exp(-mean);
  double cdf = p;
  std::int64_t k = 0;
  const std::int64_t cap = static_cast<std::int64_t>(mean + 40.0 * std::sqrt(mean) + 40.0);
  while (u >= cdf && k < cap) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

// ---------------------------------------------------------------------------

std::int64_t LatticeState::total(int species) const {
  std::int64_t sum = 0;
  for (auto c : counts.at(species)) sum += c;
  return sum;
}

Offset SeparationSampler::sample(Rng& rng) const {
  const double u = rng.uniform();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  std::size_t idx = static_cast<std::size_t>(it - cumulative.begin());
  if (idx >= offsets.size()) idx = offsets.size() - 1;
  return offsets[idx];
}

CrdmeProcess build_crdme(const ReactionNetwork& net, const PeriodicGrid& grid, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("system size gamma must be positive");
  if (net.dimension() != grid.dimension)
    throw std::invalid_argument("network and grid dimensions differ");
  CrdmeProcess proc;
  proc.grid = grid;
  proc.gamma = gamma;
  proc.species_count = net.species_count();
  const double h = grid.spacing();
  for (const auto& s : net.species())
    proc.hop_rates.push_back(grid.points_per_axis > 1 ? s.diffusivity / (h * h) : 0.0);

  for (const auto& r : net.reactions()) {
    const auto reactants = expand_stoich(r.reactant_stoich);
    const auto products = expand_stoich(r.product_stoich);
    if (reactants.size() == 2) {
      const DiscretizedKernel dk = discretize_kernel(r.kernel, grid);
      PairTable t;
      t.anchor = reactants[0];
      t.partner = reactants[1];
      t.self = t.anchor == t.partner;
      t.offsets = dk.offsets;
      for (double w : dk.weights) t.coefficients.push_back(w / gamma);
      t.placement = r.placement;
      proc.pair_reactions.push_back(std::move(t));
      proc.pair_products.push_back(products);
    } else {
      UnimolecularTable t;
      t.reactant = reactants[0];
      t.rate = r.kernel.rate;
      t.placement = r.placement;
      SeparationSampler sampler;
      if (const auto* diss = std::get_if<Dissociation>(&r.placement)) {
        const DiscretizedKernel rho = discretize_kernel(diss->separation, grid);
        double acc = 0.0;
        for (std::size_t i = 0; i < rho.size(); ++i) {
          acc += rho.weights[i] * grid.cell_volume();
          sampler.offsets.push_back(rho.offsets[i]);
          sampler.cumulative.push_back(acc);
        }
        for (double& c : sampler.cumulative) c /= acc;
        sampler.centers = diss->centers;
      }
      proc.unimolecular_reactions.push_back(std::move(t));
      proc.uni_products.push_back(products);
      proc.uni_separation.push_back(std::move(sampler));
    }
  }
  return proc;
}

LatticeState sample_initial_counts(const std::vector<Field>& fields, double gamma,
                                   const PeriodicGrid& grid, std::uint64_t seed) {
  if (!(gamma > 0.0)) throw std::invalid_argument("system size gamma must be positive");
  Rng rng(seed);
  LatticeState state;
  state.grid = grid;
  const double hd = grid.cell_volume();
  for (const auto& f : fields) {
    if (f.size() != grid.size()) throw std::invalid_argument("field size does not match grid");
    std::vector<std::int64_t> counts(f.size());
    for (std::size_t v = 0; v < f.size(); ++v) {
      if (f[v] < 0.0 || !std::isfinite(f[v]))
        throw std::invalid_argument("initial concentration must be nonnegative");
      counts[v] = rng.poisson(gamma * f[v] * hd);
    }
    state.counts.push_back(std::move(counts));
  }
  return state;
}

GridField empirical_fields(const LatticeState& state, double gamma) {
  GridField out;
  out.grid = state.grid;
  out.time = state.time;
  const double scale = 1.0 / (gamma * state.grid.cell_volume());
  for (const auto& c : state.counts) {
    Field f(c.size());
    for (std::size_t v = 0; v < c.size(); ++v) f[v] = static_cast<double>(c[v]) * scale;
    out.species.push_back(std::move(f));
  }
  return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kRefreshInterval = 1u << 20;

/// Binary min-heap over channel ids keyed by tentative event time.
class IndexedMinHeap {
 public:
  void reset(const std::vector<double>* keys) {
    keys_ = keys;
    const std::size_t n = keys->size();
    heap_.resize(n);
    pos_.resize(n);
    for (std::size_t i = 0; i < n; ++i) heap_[i] = pos_[i] = i;
    for (std::size_t i = n / 2; i-- > 0;) sift_down(i);
  }
  std::size_t top() const { return heap_[0]; }
  void update(std::size_t id) {
    const std::size_t i = pos_[id];
    if (i > 0 && key(heap_[i]) < key(heap_[(i - 1) / 2]))
      sift_up(i);
    else
      sift_down(i);
  }
  bool check_top(double now) const { return !(key(heap_[0]) < now); }

 private:
  double key(std::size_t id) const { return (*keys_)[id]; }
  void place(std::size_t i, std::size_t id) {
    heap_[i] = id;
    pos_[id] = i;
  }
  void sift_up(std::size_t i) {
    const std::size_t id = heap_[i];
    const double k = key(id);
    while (i > 0) {
      const std::size_t parent = (i - 1) / 2;
      if (!(k < key(heap_[parent]))) break;
      place(i, heap_[parent]);
      i = parent;
    }
    place(i, id);
  }
  void sift_down(std::size_t i) {
    const std::size_t n = heap_.size();
    const std::size_t id = heap_[i];
    const double k = key(id);
    while (true) {
      std::size_t child = 2 * i + 1;
      if (child >= n) break;
      if (child + 1 < n && key(heap_[child + 1]) < key(heap_[child])) ++child;
      if (!(key(heap_[child]) < k)) break;
      place(i, heap_[child]);
      i = child;
    }
    place(i, id);
  }

  const std::vector<double>* keys_ = nullptr;
  std::vector<std::size_t> heap_, pos_;
};

struct HopStencil {
  std::vector<Offset> offsets;  // r: partner-sum at w - r changes by delta
  std::vector<double> deltas;
};

class SsaEngine {
 public:
  SsaEngine(const CrdmeProcess& proc, const LatticeState& init, std::uint64_t seed)
      : p_(proc), grid_(proc.grid), rng_(seed), state_(init) {
    if (!(init.grid == proc.grid)) throw std::invalid_argument("initial state grid mismatch");
    if (static_cast<int>(init.counts.size()) != proc.species_count)
      throw std::invalid_argument("initial state species count mismatch");
    V_ = grid_.size();
    J_ = static_cast<std::size_t>(proc.species_count);
    directions_ = 2 * grid_.dimension;
    uni_base_ = J_ * V_;
    pair_base_ = uni_base_ + p_.unimolecular_reactions.size() * V_;
    const std::size_t M = pair_base_ + p_.pair_reactions.size() * V_;

    uni_of_.resize(J_);
    anchor_of_.resize(J_);
    partner_of_.resize(J_);
    for (std::size_t u = 0; u < p_.unimolecular_reactions.size(); ++u)
      uni_of_[p_.unimolecular_reactions[u].reactant].push_back(u);
    for (std::size_t q = 0; q < p_.pair_reactions.size(); ++q) {
      const auto& t = p_.pair_reactions[q];
      anchor_of_[t.anchor].push_back(q);
      partner_of_[t.partner].push_back(q);
      build_pair_tables(t);
    }

    partner_sum_.assign(p_.pair_reactions.size(), std::vector<double>(V_, 0.0));
    recompute_partner_sums();
    propensity_.assign(M, 0.0);
    times_.assign(M, kInf);
    marked_flag_.assign(M, 0);
    for (std::size_t ch = 0; ch < M; ++ch) {
      propensity_[ch] = compute_propensity(ch);
      if (propensity_[ch] > 0.0) times_[ch] = rng_.exponential() / propensity_[ch];
    }
    heap_.reset(&times_);
  }

  Trajectory run(double final_time, const std::vector<double>& save_times,
                 const std::vector<double>& snapshot_times) {
    Trajectory traj;
    traj.save_times = save_times;
    snapshot_times_ = &snapshot_times;
    std::size_t next_save = 0;
    double now = state_.time;
    std::uint64_t events = 0;
    while (true) {
      const std::size_t ch = heap_.top();
      const double tau = times_[ch];
      if (!heap_.check_top(now))
        throw std::runtime_error("event queue corruption: next event precedes the clock");
      const double horizon = std::min(tau, final_time);
      while (next_save < save_times.size() &&
             (save_times[next_save] < tau || (tau > final_time && save_times[next_save] <= horizon))) {
        if (save_times[next_save] > final_time) break;
        record(traj, save_times[next_save]);
        ++next_save;
      }
      if (!(tau <= final_time)) break;
      now = tau;
      state_.time = now;
      fire(ch, now);
      ++events;
      if (events % kRefreshInterval == 0) refresh(now);
    }
    while (next_save < save_times.size() && save_times[next_save] <= final_time) {
      record(traj, save_times[next_save]);
      ++next_save;
    }
    state_.time = final_time;
    traj.event_count = events;
    return traj;
  }

 private:
  // -- tables -------------------------------------------------------------

  void build_pair_tables(const PairTable& t) {
    Field dense(V_, 0.0);
    for (std::size_t i = 0; i < t.offsets.size(); ++i)
      dense[grid_.flat_index(t.offsets[i][0], t.offsets[i][1])] += t.coefficients[i];
    self_coefficient_.push_back(dense[0]);
    std::vector<HopStencil> stencils(directions_);
    for (int dir = 0; dir < directions_; ++dir) {
      const Offset delta = direction(dir);
      for (std::size_t r = 0; r < V_; ++r) {
        const auto idx = grid_.multi_index(r);
        const double after = dense[grid_.flat_index(idx[0] + delta[0], idx[1] + delta[1])];
        const double diff = after - dense[r];
        if (diff != 0.0) {
          stencils[dir].offsets.push_back({idx[0], idx[1]});
          stencils[dir].deltas.push_back(diff);
        }
      }
    }
    hop_stencils_.push_back(std::move(stencils));
  }

  Offset direction(int dir) const {
    switch (dir) {
      case 0: return {1, 0};
      case 1: return {-1, 0};
      case 2: return {0, 1};
      default: return {0, -1};
    }
  }

  std::size_t shift(std::size_t v, int d0, int d1) const {
    const auto idx = grid_.multi_index(v);
    return grid_.flat_index(idx[0] + d0, idx[1] + d1);
  }

  void recompute_partner_sums() {
    for (std::size_t q = 0; q < p_.pair_reactions.size(); ++q) {
      const auto& t = p_.pair_reactions[q];
      auto& sum = partner_sum_[q];
      std::fill(sum.begin(), sum.end(), 0.0);
      const auto& partner = state_.counts[t.partner];
      for (std::size_t v = 0; v < V_; ++v) {
        if (partner[v] == 0) continue;
        for (std::size_t i = 0; i < t.offsets.size(); ++i)
          sum[shift(v, -t.offsets[i][0], -t.offsets[i][1])] +=
              t.coefficients[i] * static_cast<double>(partner[v]);
      }
    }
  }

  // -- propensities ---------------------------------------------------------

  double compute_propensity(std::size_t ch) const {
    if (ch < uni_base_) {
      const std::size_t j = ch / V_, v = ch % V_;
      return directions_ * p_.hop_rates[j] * static_cast<double>(state_.counts[j][v]);
    }
    if (ch < pair_base_) {
      const std::size_t u = (ch - uni_base_) / V_, v = (ch - uni_base_) % V_;
      const auto& t = p_.unimolecular_reactions[u];
      return t.rate * static_cast<double>(state_.counts[t.reactant][v]);
    }
    const std::size_t q = (ch - pair_base_) / V_, v = (ch - pair_base_) % V_;
    const auto& t = p_.pair_reactions[q];
    const double n = static_cast<double>(state_.counts[t.anchor][v]);
    if (n == 0.0) return 0.0;
    const double s = partner_sum_[q][v];
    if (t.self) return std::max(0.0, 0.5 * n * (s - self_coefficient_[q]));
    return std::max(0.0, n * s);
  }

  void mark(std::size_t ch) {
    if (!marked_flag_[ch]) {
      marked_flag_[ch] = 1;
      marked_.push_back(ch);
    }
  }

  void touch_voxel(std::size_t j, std::size_t v) {
    mark(j * V_ + v);
    for (std::size_t u : uni_of_[j]) mark(uni_base_ + u * V_ + v);
    for (std::size_t q : anchor_of_[j]) mark(pair_base_ + q * V_ + v);
  }

  void change_count(std::size_t j, std::size_t v, std::int64_t delta) {
    state_.counts[j][v] += delta;
    touch_voxel(j, v);
    for (std::size_t q : partner_of_[j]) {
      const auto& t = p_.pair_reactions[q];
      auto& sum = partner_sum_[q];
      const auto& anchor = state_.counts[t.anchor];
      for (std::size_t i = 0; i < t.offsets.size(); ++i) {
        const std::size_t target = shift(v, -t.offsets[i][0], -t.offsets[i][1]);
        sum[target] += t.coefficients[i] * static_cast<double>(delta);
        if (anchor[target] > 0) mark(pair_base_ + q * V_ + target);
      }
    }
  }

  void hop(std::size_t j, std::size_t w, int dir) {
    const Offset d = direction(dir);
    const std::size_t w2 = shift(w, d[0], d[1]);
    state_.counts[j][w] -= 1;
    state_.counts[j][w2] += 1;
    touch_voxel(j, w);
    touch_voxel(j, w2);
    for (std::size_t q : partner_of_[j]) {
      const auto& st = hop_stencils_[q][dir];
      auto& sum = partner_sum_[q];
      const auto& anchor = state_.counts[p_.pair_reactions[q].anchor];
      for (std::size_t i = 0; i < st.offsets.size(); ++i) {
        const std::size_t target = shift(w, -st.offsets[i][0], -st.offsets[i][1]);
        sum[target] += st.deltas[i];
        if (anchor[target] > 0) mark(pair_base_ + q * V_ + target);
      }
    }
  }

  // Stochastic rounding of base + frac per axis.
  std::size_t place(std::size_t v, double shift0, double shift1) {
    const auto idx = grid_.multi_index(v);
    long pos[2] = {idx[0], idx[1]};
    const double shifts[2] = {shift0, shift1};
    for (int a = 0; a < grid_.dimension; ++a) {
      const double fl = std::floor(shifts[a]);
      const double frac = shifts[a] - fl;
      pos[a] += static_cast<long>(fl);
      if (frac > 0.0 && rng_.bernoulli(frac)) pos[a] += 1;
    }
    return grid_.flat_index(static_cast<int>(grid_.wrap(pos[0])),
                            static_cast<int>(grid_.wrap(pos[1])));
  }

  const Center& pick_center(const std::vector<Center>& centers) {
    if (centers.size() == 1) return centers[0];
    const double u = rng_.uniform();
    double acc = 0.0;
    for (const auto& c : centers) {
      acc += c.weight;
      if (u < acc) return c;
    }
    return centers.back();
  }

  void fire_unimolecular(std::size_t u, std::size_t v) {
    const auto& t = p_.unimolecular_reactions[u];
    const auto& products = p_.uni_products[u];
    change_count(t.reactant, v, -1);
    if (std::holds_alternative<DiracAtReactant>(t.placement)) {
      change_count(products[0], v, +1);
    } else if (std::holds_alternative<Dissociation>(t.placement)) {
      const auto& sampler = p_.uni_separation[u];
      const Center& c = pick_center(sampler.centers);
      const Offset s = sampler.sample(rng_);
      // First product at z + (1 - alpha) s, second at z - alpha s.
      const std::size_t x = place(v, (1.0 - c.alpha) * s[0], (1.0 - c.alpha) * s[1]);
      const std::size_t y = place(v, -c.alpha * s[0], -c.alpha * s[1]);
      change_count(products[0], x, +1);
      change_count(products[1], y, +1);
    }
  }

  void fire_pair(std::size_t q, std::size_t v) {
    const auto& t = p_.pair_reactions[q];
    const auto& partner = state_.counts[t.partner];
    // Choose the partner offset with probability ~ c(o) * (available partners).
    double total = 0.0;
    for (std::size_t i = 0; i < t.offsets.size(); ++i) {
      const std::size_t w = shift(v, t.offsets[i][0], t.offsets[i][1]);
      double avail = static_cast<double>(partner[w]);
      if (t.self && w == v) avail -= 1.0;
      total += t.coefficients[i] * avail;
    }
    const double target = rng_.uniform() * total;
    double acc = 0.0;
    std::size_t chosen = t.offsets.size();
    for (std::size_t i = 0; i < t.offsets.size(); ++i) {
      const std::size_t w = shift(v, t.offsets[i][0], t.offsets[i][1]);
      double avail = static_cast<double>(partner[w]);
      if (t.self && w == v) avail -= 1.0;
      if (avail <= 0.0) continue;
      acc += t.coefficients[i] * avail;
      chosen = i;
      if (target < acc) break;
    }
    if (chosen == t.offsets.size()) throw std::runtime_error("pair event without partner");
    const Offset o = t.offsets[chosen];
    const std::size_t w = shift(v, o[0], o[1]);
    change_count(t.anchor, v, -1);
    change_count(t.partner, w, -1);
    const auto& products = p_.pair_products[q];
    if (const auto* cc = std::get_if<ConvexCombination>(&t.placement)) {
      const Center& c = pick_center(cc->centers);
      // z = alpha x + (1 - alpha) y with x = v, y = v + o.
      const std::size_t z = place(v, (1.0 - c.alpha) * o[0], (1.0 - c.alpha) * o[1]);
      change_count(products[0], z, +1);
    } else if (const auto* pp = std::get_if<PairPreserving>(&t.placement)) {
      const bool keep = rng_.bernoulli(pp->p);
      change_count(products[0], keep ? v : w, +1);
      change_count(products[1], keep ? w : v, +1);
    }
  }

  void fire(std::size_t ch, double now) {
    if (ch < uni_base_) {
      const std::size_t j = ch / V_, v = ch % V_;
      const int dir = directions_ == 2 ? static_cast<int>(rng_.bits() >> 63)
                                       : static_cast<int>(rng_.bits() >> 62);
      hop(j, v, dir);
    } else if (ch < pair_base_) {
      fire_unimolecular((ch - uni_base_) / V_, (ch - uni_base_) % V_);
    } else {
      fire_pair((ch - pair_base_) / V_, (ch - pair_base_) % V_);
    }
    // Fired channel: fresh clock.
    const double a = compute_propensity(ch);
    propensity_[ch] = a;
    times_[ch] = a > 0.0 ? now + rng_.exponential() / a : kInf;
    heap_.update(ch);
    marked_flag_[ch] = 0;
    for (std::size_t m : marked_) {
      if (!marked_flag_[m]) continue;  // the fired channel
      marked_flag_[m] = 0;
      reschedule(m, compute_propensity(m), now);
    }
    marked_.clear();
  }

  void reschedule(std::size_t ch, double a_new, double now) {
    const double a_old = propensity_[ch];
    if (a_new == a_old) return;
    if (!(a_new > 0.0)) {
      times_[ch] = kInf;
    } else if (a_old > 0.0 && times_[ch] < kInf) {
      times_[ch] = now + (a_old / a_new) * (times_[ch] - now);
    } else {
      times_[ch] = now + rng_.exponential() / a_new;
    }
    propensity_[ch] = a_new;
    heap_.update(ch);
  }

  void refresh(double now) {
    recompute_partner_sums();
    for (std::size_t ch = pair_base_; ch < propensity_.size(); ++ch)
      reschedule(ch, compute_propensity(ch), now);
  }

  void record(Trajectory& traj, double t) {
    std::vector<double> masses;
    for (std::size_t j = 0; j < J_; ++j)
      masses.push_back(static_cast<double>(state_.total(static_cast<int>(j))) / p_.gamma);
    traj.molar_masses.push_back(std::move(masses));
    if (std::find(snapshot_times_->begin(), snapshot_times_->end(), t) == snapshot_times_->end())
      return;
    LatticeState snap = state_;
    snap.time = t;
    traj.snapshot_times.push_back(t);
    traj.snapshots.push_back(std::move(snap));
  }

  const CrdmeProcess& p_;
  PeriodicGrid grid_;
  Rng rng_;
  LatticeState state_;
  std::size_t V_ = 0, J_ = 0;
  int directions_ = 2;
  std::size_t uni_base_ = 0, pair_base_ = 0;
  std::vector<std::vector<std::size_t>> uni_of_, anchor_of_, partner_of_;
  std::vector<std::vector<HopStencil>> hop_stencils_;
  std::vector<double> self_coefficient_;
  std::vector<std::vector<double>> partner_sum_;
  std::vector<double> propensity_, times_;
  std::vector<char> marked_flag_;
  std::vector<std::size_t> marked_;
  IndexedMinHeap heap_;
  const std::vector<double>* snapshot_times_ = nullptr;
};

}  // namespace

Trajectory ssa_run(const CrdmeProcess& process, const LatticeState& initial, double final_time,
                   const std::vector<double>& save_times, std::uint64_t seed,
                   const std::vector<double>& snapshot_times) {
  if (!(final_time > 0.0)) throw std::invalid_argument("final time must be positive");
  if (!std::is_sorted(save_times.begin(), save_times.end()))
    throw std::invalid_argument("save times must be sorted");
  SsaEngine engine(process, initial, seed);
  Trajectory traj = engine.run(final_time, save_times, snapshot_times);
  traj.seed = seed;
  return traj;
}

Trajectory ssa_run(const CrdmeProcess& process, const LatticeState& initial, double final_time,
                   const std::vector<double>& save_times, std::uint64_t seed) {
  return ssa_run(process, initial, final_time, save_times, seed, save_times);
}

EnsembleSummary ensemble_mean(const std::vector<Trajectory>& trajectories, double gamma) {
  if (trajectories.empty()) throw std::invalid_argument("empty ensemble");
  const auto& first = trajectories.front();
  for (const auto& t : trajectories)
    if (t.save_times != first.save_times || t.snapshot_times != first.snapshot_times ||
        t.molar_masses.size() != first.molar_masses.size())
      throw std::invalid_argument("mismatched save grids across trajectories");
  EnsembleSummary out;
  out.save_times = first.save_times;
  out.snapshot_times = first.snapshot_times;
  out.runs = trajectories.size();
  const double n = static_cast<double>(trajectories.size());
  for (std::size_t s = 0; s < first.molar_masses.size(); ++s) {
    const std::size_t J = first.molar_masses[s].size();
    std::vector<double> mean(J, 0.0), sq(J, 0.0), se(J, 0.0);
    for (const auto& t : trajectories)
      for (std::size_t j = 0; j < J; ++j) mean[j] += t.molar_masses[s][j];
    for (double& m : mean) m /= n;
    for (const auto& t : trajectories)
      for (std::size_t j = 0; j < J; ++j) {
        const double d = t.molar_masses[s][j] - mean[j];
        sq[j] += d * d;
      }
    if (trajectories.size() > 1)
      for (std::size_t j = 0; j < J; ++j) se[j] = std::sqrt(sq[j] / (n - 1.0) / n);
    out.mean_masses.push_back(std::move(mean));
    out.stderr_masses.push_back(std::move(se));
  }
  for (std::size_t s = 0; s < first.snapshots.size(); ++s) {
    std::vector<Field> fields;
    for (const auto& t : trajectories) {
      const GridField f = empirical_fields(t.snapshots[s], gamma);
      if (fields.empty()) fields.assign(f.species.size(), Field(f.grid.size(), 0.0));
      for (std::size_t j = 0; j < fields.size(); ++j)
        for (std::size_t v = 0; v < fields[j].size(); ++v) fields[j][v] += f.species[j][v];
    }
    for (auto& f : fields)
      for (double& v : f) v /= n;
    out.mean_fields.push_back(std::move(fields));
  }
  return out;
}

}  // namespace nlrd
