#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include "nlrd/grid.hpp"
#include "nlrd/kernels.hpp"

namespace nlrd {

using Spectrum = std::vector<std::complex<double>>;

/// Real-to-complex discrete Fourier transform on a periodic grid (half
/// spectrum along the last axis). inverse() includes the 1/N^d factor, so
/// inverse(forward(f)) == f up to roundoff.
class FourierTransform {
 public:
  explicit FourierTransform(const PeriodicGrid& grid);
  ~FourierTransform();
  FourierTransform(const FourierTransform&) = delete;
  FourierTransform& operator=(const FourierTransform&) = delete;

  void forward(const Field& in, Spectrum& out) const;
  /// `in` is used as scratch and left unspecified.
  void inverse(Spectrum& in, Field& out) const;

  const PeriodicGrid& grid() const { return grid_; }
  std::size_t spectrum_size() const { return spectrum_size_; }
  /// |k|^2 for each spectral coefficient, k = 2 pi m / L.
  const std::vector<double>& wavenumber_squared() const { return k2_; }

 private:
  struct Plans;
  PeriodicGrid grid_;
  std::size_t spectrum_size_ = 0;
  std::vector<double> k2_;
  std::unique_ptr<Plans> plans_;
};

/// Crank-Nicolson amplification (1 - dt D k^2 / 2) / (1 + dt D k^2 / 2) per mode.
std::vector<double> cn_diffusion_factors(double diffusivity, double dt,
                                         const FourierTransform& transform);

/// Direct periodic sum  (K * f)(x_i) = sum_o w(o) f(x_{i-o}) h^d.
Field circular_convolution(const Field& field, const DiscretizedKernel& kernel);

/// Transform-based version of circular_convolution for wide kernels.
class SpectralConvolver {
 public:
  SpectralConvolver(std::shared_ptr<const FourierTransform> transform,
                    const DiscretizedKernel& kernel);
  Field apply(const Field& field) const;
  /// Applies to a field whose forward transform is already known.
  Field apply_spectrum(const Spectrum& field_hat) const;

 private:
  std::shared_ptr<const FourierTransform> transform_;
  Spectrum kernel_hat_;
};

/// Picks direct summation for narrow stencils and the transform otherwise.
class Convolution {
 public:
  Convolution(std::shared_ptr<const FourierTransform> transform, DiscretizedKernel kernel);
  Field apply(const Field& field) const;
  const DiscretizedKernel& kernel() const { return kernel_; }
  bool uses_transform() const { return spectral_ != nullptr; }

 private:
  DiscretizedKernel kernel_;
  std::unique_ptr<SpectralConvolver> spectral_;
};

/// Reaction part N[rho]: writes one derivative field per species into `out`.
using ReactionRhs = std::function<void(const std::vector<Field>& fields, std::vector<Field>& out)>;

struct StepperState {
  std::vector<Field> fields;
  std::vector<Field> previous_rhs;  // N[rho^{n-1}]
  double dt = 0.0;
  long step = 0;
  double time = 0.0;
};

/// Diffusion-implicit / reaction-explicit time integration on a periodic grid.
/// Owns scratch buffers; one instance per simulation.
class ImexIntegrator {
 public:
  ImexIntegrator(std::shared_ptr<const FourierTransform> transform,
                 std::vector<double> diffusivities, double dt);

  /// Forward-backward Euler from t = 0 to t = dt in sub-steps of dt^2.
  StepperState bootstrap(std::vector<Field> initial, const ReactionRhs& rhs);
  /// One CNAB step: CN diffusion, AB2 reaction.
  void step(StepperState& state, const ReactionRhs& rhs);

  double dt() const { return dt_; }
  long bootstrap_substeps() const;
  const FourierTransform& transform() const { return *transform_; }

 private:
  void check_finite(const StepperState& state) const;

  std::shared_ptr<const FourierTransform> transform_;
  std::vector<double> diffusivities_;
  double dt_;
  std::vector<std::vector<double>> cn_numerator_;
  std::vector<std::vector<double>> cn_denominator_;
  std::vector<Field> rhs_now_;
  Spectrum rho_hat_, forcing_hat_;
  Field forcing_;
};

StepperState bootstrap_first_step(ImexIntegrator& integrator, std::vector<Field> initial,
                                  const ReactionRhs& rhs);
void cnab_step(ImexIntegrator& integrator, StepperState& state, const ReactionRhs& rhs);

}  // namespace nlrd
