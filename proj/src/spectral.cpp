#include "nlrd/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace nlrd {

namespace {

// The FFTW planner is not re-entrant; execution with the new-array interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr std::size_t kDirectConvolutionMaxOffsets = 24;

}  // namespace

struct FourierTransform::Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

FourierTransform::FourierTransform(const PeriodicGrid& grid)
    : grid_(grid), plans_(std::make_unique<Plans>()) {
  const int n = grid.points_per_axis;
  const int half = n / 2 + 1;
  spectrum_size_ = grid.dimension == 1 ? static_cast<std::size_t>(half)
                                       : static_cast<std::size_t>(n) * half;
  k2_.resize(spectrum_size_);
  const double base = 2.0 * std::numbers::pi / grid.length;
  auto wave = [&](int m) { return base * (m <= n / 2 ? m : m - n); };
  if (grid.dimension == 1) {
    for (int m = 0; m < half; ++m) k2_[m] = wave(m) * wave(m);
  } else {
    for (int m0 = 0; m0 < n; ++m0)
      for (int m1 = 0; m1 < half; ++m1)
        k2_[static_cast<std::size_t>(m0) * half + m1] = wave(m0) * wave(m0) + wave(m1) * wave(m1);
  }

  std::vector<double> real(grid.size());
  std::vector<std::complex<double>> cplx(spectrum_size_);
  auto* r = real.data();
  auto* c = reinterpret_cast<fftw_complex*>(cplx.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (grid.dimension == 1) {
    plans_->forward = fftw_plan_dft_r2c_1d(n, r, c, flags);
    plans_->inverse = fftw_plan_dft_c2r_1d(n, c, r, flags);
  } else {
    plans_->forward = fftw_plan_dft_r2c_2d(n, n, r, c, flags);
    plans_->inverse = fftw_plan_dft_c2r_2d(n, n, c, r, flags);
  }
  if (!plans_->forward || !plans_->inverse) throw std::runtime_error("FFTW planning failed");
}

FourierTransform::~FourierTransform() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plans_->forward) fftw_destroy_plan(plans_->forward);
  if (plans_->inverse) fftw_destroy_plan(plans_->inverse);
}

void FourierTransform::forward(const Field& in, Spectrum& out) const {
  if (in.size() != grid_.size()) throw std::invalid_argument("field size does not match grid");
  out.resize(spectrum_size_);
  // r2c does not modify its input.
  fftw_execute_dft_r2c(plans_->forward, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void FourierTransform::inverse(Spectrum& in, Field& out) const {
  if (in.size() != spectrum_size_) throw std::invalid_argument("spectrum size mismatch");
  out.resize(grid_.size());
  fftw_execute_dft_c2r(plans_->inverse, reinterpret_cast<fftw_complex*>(in.data()), out.data());
  const double scale = 1.0 / static_cast<double>(grid_.size());
  for (double& v : out) v *= scale;
}

std::vector<double> cn_diffusion_factors(double diffusivity, double dt,
                                         const FourierTransform& transform) {
  const auto& k2 = transform.wavenumber_squared();
  std::vector<double> out(k2.size());
  for (std::size_t m = 0; m < k2.size(); ++m) {
    const double a = 0.5 * dt * diffusivity * k2[m];
    out[m] = (1.0 - a) / (1.0 + a);
  }
  return out;
}

Field circular_convolution(const Field& field, const DiscretizedKernel& kernel) {
  const auto& grid = kernel.grid;
  if (field.size() != grid.size()) throw std::invalid_argument("field size does not match grid");
  if (2 * kernel.support_radius > grid.points_per_axis)
    throw std::invalid_argument("kernel support exceeds half the domain");
  const double hd = grid.cell_volume();
  const int n = grid.points_per_axis;
  Field out(field.size(), 0.0);
  if (grid.dimension == 1) {
    for (std::size_t k = 0; k < kernel.size(); ++k) {
      const double w = kernel.weights[k] * hd;
      const int shift = grid.wrap(kernel.offsets[k][0]);
      for (int i = 0; i < n; ++i) {
        int src = i - shift;
        if (src < 0) src += n;
        out[i] += w * field[src];
      }
    }
    return out;
  }
  for (std::size_t k = 0; k < kernel.size(); ++k) {
    const double w = kernel.weights[k] * hd;
    const int s0 = grid.wrap(kernel.offsets[k][0]);
    const int s1 = grid.wrap(kernel.offsets[k][1]);
    for (int i0 = 0; i0 < n; ++i0) {
      int r0 = i0 - s0;
      if (r0 < 0) r0 += n;
      const double* row = field.data() + static_cast<std::size_t>(r0) * n;
      double* dst = out.data() + static_cast<std::size_t>(i0) * n;
      for (int i1 = 0; i1 < n; ++i1) {
        int r1 = i1 - s1;
        if (r1 < 0) r1 += n;
        dst[i1] += w * row[r1];
      }
    }
  }
  return out;
}

SpectralConvolver::SpectralConvolver(std::shared_ptr<const FourierTransform> transform,
                                     const DiscretizedKernel& kernel)
    : transform_(std::move(transform)) {
  const auto& grid = transform_->grid();
  if (!(grid == kernel.grid)) throw std::invalid_argument("kernel grid mismatch");
  Field dense(grid.size(), 0.0);
  for (std::size_t k = 0; k < kernel.size(); ++k)
    dense[grid.flat_index(kernel.offsets[k][0], kernel.offsets[k][1])] +=
        kernel.weights[k] * grid.cell_volume();
  transform_->forward(dense, kernel_hat_);
}

Field SpectralConvolver::apply(const Field& field) const {
  Spectrum hat;
  transform_->forward(field, hat);
  return apply_spectrum(hat);
}

Field SpectralConvolver::apply_spectrum(const Spectrum& field_hat) const {
  Spectrum prod(field_hat.size());
  for (std::size_t m = 0; m < prod.size(); ++m) prod[m] = field_hat[m] * kernel_hat_[m];
  Field out;
  transform_->inverse(prod, out);
  return out;
}

Convolution::Convolution(std::shared_ptr<const FourierTransform> transform,
                         DiscretizedKernel kernel)
    : kernel_(std::move(kernel)) {
  const bool wide = kernel_.size() > kDirectConvolutionMaxOffsets ||
                    2 * kernel_.support_radius > kernel_.grid.points_per_axis;
  if (wide) spectral_ = std::make_unique<SpectralConvolver>(std::move(transform), kernel_);
}

Field Convolution::apply(const Field& field) const {
  return spectral_ ? spectral_->apply(field) : circular_convolution(field, kernel_);
}

ImexIntegrator::ImexIntegrator(std::shared_ptr<const FourierTransform> transform,
                               std::vector<double> diffusivities, double dt)
    : transform_(std::move(transform)), diffusivities_(std::move(diffusivities)), dt_(dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time step must be positive");
  const auto& k2 = transform_->wavenumber_squared();
  for (double d : diffusivities_) {
    if (d < 0.0) throw std::invalid_argument("diffusivity must be nonnegative");
    std::vector<double> num(k2.size()), den(k2.size());
    for (std::size_t m = 0; m < k2.size(); ++m) {
      const double a = 0.5 * dt * d * k2[m];
      num[m] = 1.0 - a;
      den[m] = 1.0 + a;
    }
    cn_numerator_.push_back(std::move(num));
    cn_denominator_.push_back(std::move(den));
  }
}

long ImexIntegrator::bootstrap_substeps() const {
  // ceil(1/dt), guarded against 1/dt landing a hair above an integer.
  return std::max(1L, static_cast<long>(std::ceil(1.0 / dt_ * (1.0 - 1e-12))));
}

void ImexIntegrator::check_finite(const StepperState& state) const {
  for (const auto& f : state.fields)
    for (double v : f)
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "non-finite field value at step " << state.step;
        throw std::runtime_error(os.str());
      }
}

StepperState ImexIntegrator::bootstrap(std::vector<Field> initial, const ReactionRhs& rhs) {
  const std::size_t J = diffusivities_.size();
  if (initial.size() != J) throw std::invalid_argument("species count mismatch");
  StepperState state;
  state.dt = dt_;
  state.fields = std::move(initial);
  check_finite(state);
  state.previous_rhs.assign(J, Field(transform_->grid().size(), 0.0));
  rhs(state.fields, state.previous_rhs);  // N[rho(0)] is the AB2 history

  const auto& k2 = transform_->wavenumber_squared();
  const long substeps = bootstrap_substeps();
  const double tau = dt_ * dt_;
  rhs_now_ = state.previous_rhs;
  for (long s = 0; s < substeps; ++s) {
    const double this_tau = s + 1 < substeps ? tau : dt_ - tau * static_cast<double>(substeps - 1);
    if (s > 0) rhs(state.fields, rhs_now_);
    for (std::size_t j = 0; j < J; ++j) {
      Field& f = state.fields[j];
      forcing_.resize(f.size());
      for (std::size_t i = 0; i < f.size(); ++i) forcing_[i] = f[i] + this_tau * rhs_now_[j][i];
      transform_->forward(forcing_, rho_hat_);
      const double d = diffusivities_[j];
      for (std::size_t m = 0; m < rho_hat_.size(); ++m) rho_hat_[m] /= 1.0 + this_tau * d * k2[m];
      transform_->inverse(rho_hat_, f);
    }
  }
  state.time = dt_;
  state.step = 1;
  check_finite(state);
  return state;
}

void ImexIntegrator::step(StepperState& state, const ReactionRhs& rhs) {
  const std::size_t J = diffusivities_.size();
  if (state.previous_rhs.size() != J) throw std::invalid_argument("stepper not bootstrapped");
  rhs_now_.resize(J);
  for (auto& r : rhs_now_) r.assign(transform_->grid().size(), 0.0);
  rhs(state.fields, rhs_now_);
  for (std::size_t j = 0; j < J; ++j) {
    Field& f = state.fields[j];
    forcing_.resize(f.size());
    const Field& now = rhs_now_[j];
    const Field& prev = state.previous_rhs[j];
    for (std::size_t i = 0; i < f.size(); ++i)
      forcing_[i] = dt_ * (1.5 * now[i] - 0.5 * prev[i]);
    transform_->forward(f, rho_hat_);
    transform_->forward(forcing_, forcing_hat_);
    const auto& num = cn_numerator_[j];
    const auto& den = cn_denominator_[j];
    for (std::size_t m = 0; m < rho_hat_.size(); ++m)
      rho_hat_[m] = (num[m] * rho_hat_[m] + forcing_hat_[m]) / den[m];
    transform_->inverse(rho_hat_, f);
  }
  std::swap(state.previous_rhs, rhs_now_);
  ++state.step;
  state.time = state.step * dt_;
  check_finite(state);
}

StepperState bootstrap_first_step(ImexIntegrator& integrator, std::vector<Field> initial,
                                  const ReactionRhs& rhs) {
  return integrator.bootstrap(std::move(initial), rhs);
}

void cnab_step(ImexIntegrator& integrator, StepperState& state, const ReactionRhs& rhs) {
  integrator.step(state, rhs);
}

}  // namespace nlrd
