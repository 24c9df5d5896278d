#include "nlrd/rhs.hpp"

#include <cmath>
#include <stdexcept>

namespace nlrd {

namespace {

void reset(std::vector<Field>& out, std::size_t species, std::size_t points) {
  out.resize(species);
  for (auto& f : out) f.assign(points, 0.0);
}

void add_scaled(Field& dst, double scale, const Field& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

void add_product(Field& dst, double scale, const Field& a, const Field& b) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * (a[i] * b[i]);
}

// sum_u w(u) A(x) B(x - u) h^d deposited at z = x - (1 - alpha) u.
void deposit_pair_rate(Field& out, double scale, const Field& a, const Field& b,
                       const DiscretizedKernel& dk, double alpha) {
  const auto& grid = dk.grid;
  const int n = grid.points_per_axis;
  const double hd = grid.cell_volume();
  for (std::size_t k = 0; k < dk.size(); ++k) {
    const double w = scale * dk.weights[k] * hd;
    int base[2] = {0, 0};
    double frac[2] = {0.0, 0.0};
    for (int ax = 0; ax < grid.dimension; ++ax) {
      const double pos = -(1.0 - alpha) * dk.offsets[k][ax];
      const double fl = std::floor(pos);
      base[ax] = static_cast<int>(fl);
      frac[ax] = pos - fl;
    }
    if (grid.dimension == 1) {
      const int u = dk.offsets[k][0];
      for (int x = 0; x < n; ++x) {
        const double r = w * a[x] * b[grid.wrap(x - u)];
        if (r == 0.0) continue;
        out[grid.wrap(x + base[0])] += r * (1.0 - frac[0]);
        if (frac[0] > 0.0) out[grid.wrap(x + base[0] + 1)] += r * frac[0];
      }
      continue;
    }
    const int u0 = dk.offsets[k][0], u1 = dk.offsets[k][1];
    for (int x0 = 0; x0 < n; ++x0) {
      for (int x1 = 0; x1 < n; ++x1) {
        const double r = w * a[grid.flat_index(x0, x1)] * b[grid.flat_index(x0 - u0, x1 - u1)];
        if (r == 0.0) continue;
        for (int c0 = 0; c0 <= 1; ++c0) {
          const double w0 = c0 ? frac[0] : 1.0 - frac[0];
          if (w0 == 0.0) continue;
          for (int c1 = 0; c1 <= 1; ++c1) {
            const double w1 = c1 ? frac[1] : 1.0 - frac[1];
            if (w1 == 0.0) continue;
            out[grid.flat_index(x0 + base[0] + c0, x1 + base[1] + c1)] += r * w0 * w1;
          }
        }
      }
    }
  }
}

// Binding gain given precomputed K*A and K*B.
void accumulate_binding_gain(Field& out, double scale, const Field& a, const Field& b,
                             const Field& conv_a, const Field& conv_b,
                             const DiscretizedKernel& dk, const ConvexCombination& placement) {
  for (const auto& c : placement.centers) {
    if (c.weight == 0.0) continue;
    if (c.alpha == 1.0)
      add_product(out, scale * c.weight, a, conv_b);
    else if (c.alpha == 0.0)
      add_product(out, scale * c.weight, b, conv_a);
    else
      deposit_pair_rate(out, scale * c.weight, a, b, dk, c.alpha);
  }
}

}  // namespace

void sm_rhs(const ReactionNetwork& net, const std::vector<Field>& fields, std::vector<Field>& out) {
  const std::size_t J = static_cast<std::size_t>(net.species_count());
  if (fields.size() != J) throw std::invalid_argument("species count mismatch");
  const std::size_t n = fields.front().size();
  reset(out, J, n);
  Field rate(n);
  for (const auto& r : net.reactions()) {
    const auto reactants = expand_stoich(r.reactant_stoich);
    // Monomial first, then the rate constant: keeps evaluation symmetric in
    // the reactant fields.
    if (reactants.size() == 1) {
      const Field& f = fields[reactants[0]];
      for (std::size_t i = 0; i < n; ++i) rate[i] = r.macroscopic_rate * f[i];
    } else {
      const Field& f = fields[reactants[0]];
      const Field& g = fields[reactants[1]];
      for (std::size_t i = 0; i < n; ++i) rate[i] = r.macroscopic_rate * (f[i] * g[i]);
    }
    for (std::size_t j = 0; j < J; ++j) {
      const int net_change = r.product_stoich[j] - r.reactant_stoich[j];
      if (net_change != 0) add_scaled(out[j], net_change, rate);
    }
  }
}

std::vector<Field> sm_rhs(const ReactionNetwork& net, const std::vector<Field>& fields) {
  std::vector<Field> out;
  sm_rhs(net, fields, out);
  return out;
}

Field binding_product_gain(const Field& a, const Field& b, const Convolution& kernel,
                           const ConvexCombination& placement) {
  Field out(a.size(), 0.0);
  bool need_a = false, need_b = false;
  for (const auto& c : placement.centers) {
    need_a |= c.alpha == 0.0;
    need_b |= c.alpha == 1.0;
  }
  const Field conv_a = need_a ? kernel.apply(a) : Field{};
  const Field conv_b = need_b ? kernel.apply(b) : Field{};
  accumulate_binding_gain(out, 1.0, a, b, conv_a, conv_b, kernel.kernel(), placement);
  return out;
}

Field binding_product_gain(const Field& a, const Field& b, const DiscretizedKernel& kernel,
                           const ConvexCombination& placement) {
  auto transform = std::make_shared<const FourierTransform>(kernel.grid);
  return binding_product_gain(a, b, Convolution(transform, kernel), placement);
}

DiscretizedKernel unbinding_stencil(const Dissociation& placement, const PeriodicGrid& grid,
                                    int which_product) {
  if (which_product != 0 && which_product != 1)
    throw std::invalid_argument("dissociation has exactly two products");
  const DiscretizedKernel rho = discretize_kernel(placement.separation, grid);
  std::vector<std::pair<double, DiscretizedKernel>> parts;
  for (const auto& c : placement.centers) {
    const double beta = which_product == 0 ? 1.0 - c.alpha : c.alpha;
    parts.emplace_back(c.weight, shifted_stencil(rho, beta));
  }
  return combine_stencils(parts);
}

Field unbinding_gain(const Field& c, const Dissociation& placement, int which_product,
                     const PeriodicGrid& grid, double rate) {
  auto transform = std::make_shared<const FourierTransform>(grid);
  Convolution spread(transform, unbinding_stencil(placement, grid, which_product));
  Field out = spread.apply(c);
  for (double& v : out) v *= rate;
  return out;
}

CompiledMfmTerms::CompiledMfmTerms(const ReactionNetwork& net, const PeriodicGrid& grid,
                                   std::shared_ptr<const FourierTransform> transform)
    : grid_(grid), species_count_(static_cast<std::size_t>(net.species_count())) {
  if (net.dimension() != grid.dimension)
    throw std::invalid_argument("network and grid dimensions differ");
  if (!transform) transform = std::make_shared<const FourierTransform>(grid);
  for (const auto& r : net.reactions()) {
    Term t;
    t.reactants = expand_stoich(r.reactant_stoich);
    t.products = expand_stoich(r.product_stoich);
    t.rate = r.kernel.rate;
    t.prefactor = 1.0 / stoich_factorial(r.reactant_stoich);
    t.placement = r.placement;
    if (t.reactants.size() == 2) t.kernel.emplace(transform, discretize_kernel(r.kernel, grid));
    if (const auto* diss = std::get_if<Dissociation>(&r.placement)) {
      for (int p = 0; p < 2; ++p)
        t.product_spread[p].emplace(transform, unbinding_stencil(*diss, grid, p));
    }
    terms_.push_back(std::move(t));
  }
}

void mfm_rhs(const CompiledMfmTerms& compiled, const std::vector<Field>& fields,
             std::vector<Field>& out) {
  const std::size_t J = compiled.species_count();
  if (fields.size() != J) throw std::invalid_argument("species count mismatch");
  const std::size_t n = compiled.grid().size();
  reset(out, J, n);
  Field rate(n);
  for (const auto& t : compiled.terms()) {
    if (t.reactants.size() == 1) {
      const Field& src = fields[t.reactants[0]];
      for (std::size_t i = 0; i < n; ++i) rate[i] = t.rate * src[i];
      add_scaled(out[t.reactants[0]], -1.0, rate);
      if (std::holds_alternative<DiracAtReactant>(t.placement)) {
        add_scaled(out[t.products[0]], 1.0, rate);
      } else if (std::holds_alternative<Dissociation>(t.placement)) {
        for (int p = 0; p < 2; ++p) {
          const Field spread = t.product_spread[p]->apply(src);
          add_scaled(out[t.products[p]], t.rate, spread);
        }
      }
      continue;
    }

    const int ia = t.reactants[0], ib = t.reactants[1];
    const Field& a = fields[ia];
    const Field& b = fields[ib];
    const Field conv_b = t.kernel->apply(b);
    const Field conv_a = ia == ib ? conv_b : t.kernel->apply(a);
    const double pre = t.prefactor;
    // Losses: each reactant slot r removes pre * rho_r (K * rho_other).
    add_product(out[ia], -pre, a, conv_b);
    add_product(out[ib], -pre, b, conv_a);

    if (const auto* cc = std::get_if<ConvexCombination>(&t.placement)) {
      accumulate_binding_gain(out[t.products[0]], pre, a, b, conv_a, conv_b, t.kernel->kernel(),
                              *cc);
    } else if (const auto* pp = std::get_if<PairPreserving>(&t.placement)) {
      // p: product 0 at reactant 0's position; 1 - p: swapped.
      add_product(out[t.products[0]], pre * pp->p, a, conv_b);
      add_product(out[t.products[0]], pre * (1.0 - pp->p), b, conv_a);
      add_product(out[t.products[1]], pre * pp->p, b, conv_a);
      add_product(out[t.products[1]], pre * (1.0 - pp->p), a, conv_b);
    }
  }
}

std::vector<Field> mfm_rhs(const CompiledMfmTerms& compiled, const std::vector<Field>& fields) {
  std::vector<Field> out;
  mfm_rhs(compiled, fields, out);
  return out;
}

}  // namespace nlrd
