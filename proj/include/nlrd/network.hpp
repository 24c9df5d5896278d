#pragma once

#include <string>
#include <variant>
#include <vector>

namespace nlrd {

struct Species {
  std::string name;
  double diffusivity = 0.0;  // length^2 / time, must be > 0
};

enum class KernelKind { Doi, Gaussian, Constant };

const char* to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

/// Reaction rate kernel. Bimolecular kinds (Doi, Gaussian) are separation
/// kernels with total mass `rate` and width `width`; Constant is the
/// unimolecular probability per time `rate`.
struct Kernel {
  KernelKind kind = KernelKind::Constant;
  double rate = 0.0;
  double width = 0.0;
  int dimension = 1;

  bool is_separation_kernel() const { return kind != KernelKind::Constant; }
};

/// One point-mass term of a placement measure: weight p_i and interpolation
/// coefficient alpha_i, placing a product at alpha_i * x + (1 - alpha_i) * y.
struct Center {
  double weight = 1.0;
  double alpha = 0.5;
};

// Placement measures. Positions refer to the reaction's ordered reactant and
// product lists (species-index order, repeated for stoichiometry 2).
struct NoProducts {};
struct DiracAtReactant {};
struct ConvexCombination {
  std::vector<Center> centers;
};
struct PairPreserving {
  double p = 1.0;  // probability that product 0 takes reactant 0's position
};
struct Dissociation {
  Kernel separation;  // unit-mass separation density rho^eps
  std::vector<Center> centers;
};

using Placement =
    std::variant<NoProducts, DiracAtReactant, ConvexCombination, PairPreserving, Dissociation>;

const char* placement_name(const Placement& placement);

struct Reaction {
  std::vector<int> reactant_stoich;
  std::vector<int> product_stoich;
  double macroscopic_rate = 0.0;  // kappa
  Kernel kernel;                  // rate = alpha! * kappa
  Placement placement;
};

int order(const std::vector<int>& stoich);
/// alpha! = prod_j alpha_j!; equals 2 only for S_j + S_j.
int stoich_factorial(const std::vector<int>& stoich);
/// Species indices expanded by multiplicity, ascending.
std::vector<int> expand_stoich(const std::vector<int>& stoich);

/// Unvalidated network description.
struct NetworkSpec {
  std::vector<Species> species;
  std::vector<Reaction> reactions;
  int dimension = 1;
};

/// A network that passed validate_network. Immutable; species are identified
/// by position.
class ReactionNetwork {
 public:
  const std::vector<Species>& species() const { return spec_.species; }
  const std::vector<Reaction>& reactions() const { return spec_.reactions; }
  int dimension() const { return spec_.dimension; }
  int species_count() const { return static_cast<int>(spec_.species.size()); }
  int species_index(const std::string& name) const;
  const NetworkSpec& spec() const { return spec_; }

 private:
  explicit ReactionNetwork(NetworkSpec spec) : spec_(std::move(spec)) {}
  friend ReactionNetwork validate_network(NetworkSpec spec);

  NetworkSpec spec_;
};

/// Checks every structural constraint and throws std::invalid_argument naming
/// the first violation ("reaction 2: reactant order exceeds 2").
ReactionNetwork validate_network(NetworkSpec spec);

/// Builds a reaction with kernel rate k = alpha! * kappa.
Reaction make_reaction(std::vector<int> reactants, std::vector<int> products, double kappa,
                       KernelKind kind, double width, int dimension, Placement placement);

/// A + B -> C with kernel K1 and binding placement, C -> A + B at constant
/// rate kappa2 with the detailed-balance dissociation placement.
ReactionNetwork preset_reversible_abc(int dimension, const std::vector<double>& diffusivities,
                                      double kappa1, double kappa2, double epsilon,
                                      KernelKind kind, const std::vector<Center>& binding);

/// A + B -> C + D and C + D -> A + B, both through separation kernels of
/// width epsilon, with pair-preserving placement.
ReactionNetwork preset_reversible_abcd(int dimension, const std::vector<double>& diffusivities,
                                       double kappa1, double kappa2, double epsilon,
                                       KernelKind kind, double p);

}  // namespace nlrd
