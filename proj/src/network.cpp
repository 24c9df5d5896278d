#include "nlrd/network.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "nlrd/kernels.hpp"

namespace nlrd {

const char* to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::Doi: return "doi";
    case KernelKind::Gaussian: return "gaussian";
    case KernelKind::Constant: return "constant";
  }
  return "?";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "doi" || name == "Doi") return KernelKind::Doi;
  if (name == "gaussian" || name == "Gaussian") return KernelKind::Gaussian;
  if (name == "constant" || name == "Constant") return KernelKind::Constant;
  throw std::invalid_argument("unknown kernel kind '" + name + "'");
}

const char* placement_name(const Placement& placement) {
  struct Visitor {
    const char* operator()(const NoProducts&) const { return "none"; }
    const char* operator()(const DiracAtReactant&) const { return "dirac"; }
    const char* operator()(const ConvexCombination&) const { return "convex"; }
    const char* operator()(const PairPreserving&) const { return "pair_preserving"; }
    const char* operator()(const Dissociation&) const { return "dissociation"; }
  };
  return std::visit(Visitor{}, placement);
}

int order(const std::vector<int>& stoich) {
  int total = 0;
  for (int s : stoich) total += s;
  return total;
}

int stoich_factorial(const std::vector<int>& stoich) {
  int f = 1;
  for (int s : stoich)
    for (int i = 2; i <= s; ++i) f *= i;
  return f;
}

std::vector<int> expand_stoich(const std::vector<int>& stoich) {
  std::vector<int> out;
  for (int j = 0; j < static_cast<int>(stoich.size()); ++j)
    for (int r = 0; r < stoich[j]; ++r) out.push_back(j);
  return out;
}

int ReactionNetwork::species_index(const std::string& name) const {
  for (int j = 0; j < species_count(); ++j)
    if (spec_.species[j].name == name) return j;
  throw std::invalid_argument("unknown species '" + name + "'");
}

namespace {

[[noreturn]] void fail(int index, const std::string& what) {
  std::ostringstream os;
  os << "reaction " << index << ": " << what;
  throw std::invalid_argument(os.str());
}

void check_centers(int index, const std::vector<Center>& centers) {
  if (centers.empty()) fail(index, "placement has no centers");
  double total = 0.0;
  for (const auto& c : centers) {
    if (!(c.weight >= 0.0)) fail(index, "placement weight must be nonnegative");
    if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) fail(index, "placement alpha must lie in [0, 1]");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) fail(index, "placement weights must sum to 1");
}

void check_reaction(int index, const Reaction& r, int species_count, int dimension) {
  if (static_cast<int>(r.reactant_stoich.size()) != species_count ||
      static_cast<int>(r.product_stoich.size()) != species_count)
    fail(index, "stoichiometry length does not match species count");
  for (int s : r.reactant_stoich)
    if (s < 0) fail(index, "negative stoichiometric coefficient");
  for (int s : r.product_stoich)
    if (s < 0) fail(index, "negative stoichiometric coefficient");

  const int n_in = order(r.reactant_stoich);
  const int n_out = order(r.product_stoich);
  if (n_in == 0) fail(index, "zeroth-order reactions are not supported");
  if (n_in > 2) fail(index, "reactant order exceeds 2");
  if (n_out > 2) fail(index, "product order exceeds 2");
  if (!(r.macroscopic_rate > 0.0) || !std::isfinite(r.macroscopic_rate))
    fail(index, "rate constant must be positive");

  const bool bimolecular = n_in == 2;
  if (bimolecular != r.kernel.is_separation_kernel()) fail(index, "kernel arity mismatch");
  if (r.kernel.is_separation_kernel()) {
    if (!(r.kernel.width > 0.0)) fail(index, "kernel width must be positive");
    if (r.kernel.dimension != dimension) fail(index, "kernel dimension mismatch");
  }
  const double k = stoich_factorial(r.reactant_stoich) * r.macroscopic_rate;
  if (r.kernel.rate != k) fail(index, "microscopic rate must equal alpha! * kappa");

  struct Visitor {
    int index, n_in, n_out, dimension;
    void operator()(const NoProducts&) const {
      if (n_out != 0) fail(index, "placement mismatch: reaction has products");
    }
    void operator()(const DiracAtReactant&) const {
      if (n_in != 1 || n_out != 1) fail(index, "placement mismatch: dirac needs one-to-one");
    }
    void operator()(const ConvexCombination& p) const {
      if (n_in != 2 || n_out != 1)
        fail(index, "placement mismatch: convex combination needs two-to-one");
      check_centers(index, p.centers);
    }
    void operator()(const PairPreserving& p) const {
      if (n_in != 2 || n_out != 2)
        fail(index, "placement mismatch: pair preserving needs two-to-two");
      if (!(p.p >= 0.0 && p.p <= 1.0)) fail(index, "pair preserving p must lie in [0, 1]");
    }
    void operator()(const Dissociation& p) const {
      if (n_in != 1 || n_out != 2)
        fail(index, "placement mismatch: dissociation needs one-to-two");
      if (!p.separation.is_separation_kernel())
        fail(index, "dissociation separation density must be a separation kernel");
      if (p.separation.rate != 1.0) fail(index, "separation density must have unit mass");
      if (!(p.separation.width > 0.0)) fail(index, "separation width must be positive");
      if (p.separation.dimension != dimension) fail(index, "separation dimension mismatch");
      check_centers(index, p.centers);
    }
  };
  std::visit(Visitor{index, n_in, n_out, dimension}, r.placement);
}

}  // namespace

ReactionNetwork validate_network(NetworkSpec spec) {
  if (spec.dimension != 1 && spec.dimension != 2)
    throw std::invalid_argument("network dimension must be 1 or 2");
  if (spec.species.empty()) throw std::invalid_argument("network has no species");
  for (std::size_t j = 0; j < spec.species.size(); ++j) {
    const auto& s = spec.species[j];
    if (!(s.diffusivity > 0.0) || !std::isfinite(s.diffusivity))
      throw std::invalid_argument("species " + std::to_string(j) + " (" + s.name +
                                  "): diffusivity must be positive");
  }
  const int J = static_cast<int>(spec.species.size());
  for (std::size_t l = 0; l < spec.reactions.size(); ++l)
    check_reaction(static_cast<int>(l), spec.reactions[l], J, spec.dimension);
  return ReactionNetwork(std::move(spec));
}

Reaction make_reaction(std::vector<int> reactants, std::vector<int> products, double kappa,
                       KernelKind kind, double width, int dimension, Placement placement) {
  Reaction r;
  r.macroscopic_rate = kappa;
  r.kernel.kind = kind;
  r.kernel.rate = stoich_factorial(reactants) * kappa;
  r.kernel.width = kind == KernelKind::Constant ? 0.0 : width;
  r.kernel.dimension = dimension;
  r.reactant_stoich = std::move(reactants);
  r.product_stoich = std::move(products);
  r.placement = std::move(placement);
  return r;
}

ReactionNetwork preset_reversible_abc(int dimension, const std::vector<double>& diffusivities,
                                      double kappa1, double kappa2, double epsilon,
                                      KernelKind kind, const std::vector<Center>& binding) {
  if (diffusivities.size() != 3)
    throw std::invalid_argument("A + B <-> C preset needs three diffusivities");
  if (kind == KernelKind::Constant)
    throw std::invalid_argument("binding kernel must be a separation kernel");
  double total = 0.0;
  for (const auto& c : binding) total += c.weight;
  if (binding.empty() || std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("binding placement weights must sum to 1");

  NetworkSpec spec;
  spec.dimension = dimension;
  spec.species = {{"A", diffusivities[0]}, {"B", diffusivities[1]}, {"C", diffusivities[2]}};
  Reaction bind = make_reaction({1, 1, 0}, {0, 0, 1}, kappa1, kind, epsilon, dimension,
                                ConvexCombination{binding});
  Reaction unbind = make_reaction({0, 0, 1}, {1, 1, 0}, kappa2, KernelKind::Constant, 0.0,
                                  dimension, NoProducts{});
  unbind.placement = detailed_balance_unbinding(bind.kernel, ConvexCombination{binding},
                                                unbind.kernel.rate);
  spec.reactions = {std::move(bind), std::move(unbind)};
  return validate_network(std::move(spec));
}

ReactionNetwork preset_reversible_abcd(int dimension, const std::vector<double>& diffusivities,
                                       double kappa1, double kappa2, double epsilon,
                                       KernelKind kind, double p) {
  if (diffusivities.size() != 4)
    throw std::invalid_argument("A + B <-> C + D preset needs four diffusivities");
  NetworkSpec spec;
  spec.dimension = dimension;
  spec.species = {{"A", diffusivities[0]},
                  {"B", diffusivities[1]},
                  {"C", diffusivities[2]},
                  {"D", diffusivities[3]}};
  spec.reactions = {
      make_reaction({1, 1, 0, 0}, {0, 0, 1, 1}, kappa1, kind, epsilon, dimension,
                    PairPreserving{p}),
      make_reaction({0, 0, 1, 1}, {1, 1, 0, 0}, kappa2, kind, epsilon, dimension,
                    PairPreserving{p}),
  };
  return validate_network(std::move(spec));
}

}  // namespace nlrd
