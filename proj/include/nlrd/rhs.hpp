#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "nlrd/grid.hpp"
#include "nlrd/kernels.hpp"
#include "nlrd/network.hpp"
#include "nlrd/spectral.hpp"

namespace nlrd {

/// Local mass-action reaction term:
///   out_j = sum_l kappa_l (beta_lj - alpha_lj) prod_k rho_k^alpha_lk.
void sm_rhs(const ReactionNetwork& net, const std::vector<Field>& fields, std::vector<Field>& out);
std::vector<Field> sm_rhs(const ReactionNetwork& net, const std::vector<Field>& fields);

/// Density of products created by a two-to-one binding with placement
/// sum_i p_i delta(z - (alpha_i x + (1 - alpha_i) y)), A at x, B at y:
///   gain(z) = sum_i p_i sum_u w(u) A(z + (1-alpha_i) u) B(z - alpha_i u) h^d.
/// alpha_i in {0, 1} reduce to A (K*B) and B (K*A); other alpha_i deposit the
/// pair rate at the product point with linear/bilinear weights.
Field binding_product_gain(const Field& a, const Field& b, const Convolution& kernel,
                           const ConvexCombination& placement);
Field binding_product_gain(const Field& a, const Field& b, const DiscretizedKernel& kernel,
                           const ConvexCombination& placement);

/// Stencil realising x -> sum_i p_i sum_s rho(s) C(x - beta_i s) h^d with
/// beta_i = 1 - alpha_i for the first product and alpha_i for the second.
DiscretizedKernel unbinding_stencil(const Dissociation& placement, const PeriodicGrid& grid,
                                    int which_product);

/// Product density created by a one-to-two dissociation at total rate k.
Field unbinding_gain(const Field& c, const Dissociation& placement, int which_product,
                     const PeriodicGrid& grid, double rate);

/// Per-reaction tables for the nonlocal reaction term, built once per
/// (network, grid). Immutable after construction.
class CompiledMfmTerms {
 public:
  CompiledMfmTerms(const ReactionNetwork& net, const PeriodicGrid& grid,
                   std::shared_ptr<const FourierTransform> transform = nullptr);

  struct Term {
    std::vector<int> reactants;
    std::vector<int> products;
    double rate = 0.0;       // k_l
    double prefactor = 1.0;  // 1 / alpha!
    Placement placement;
    std::optional<Convolution> kernel;              // bimolecular K^eps
    std::optional<Convolution> product_spread[2];   // dissociation placements
  };

  const std::vector<Term>& terms() const { return terms_; }
  const PeriodicGrid& grid() const { return grid_; }
  std::size_t species_count() const { return species_count_; }

 private:
  PeriodicGrid grid_;
  std::size_t species_count_ = 0;
  std::vector<Term> terms_;
};

/// Nonlocal reaction term of the mean-field model.
void mfm_rhs(const CompiledMfmTerms& compiled, const std::vector<Field>& fields,
             std::vector<Field>& out);
std::vector<Field> mfm_rhs(const CompiledMfmTerms& compiled, const std::vector<Field>& fields);

}  // namespace nlrd
