#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "nlrd/experiments.hpp"
#include "nlrd/kernels.hpp"
#include "nlrd/spectral.hpp"

using namespace nlrd;

namespace {

constexpr double kPi = std::numbers::pi;

std::shared_ptr<const FourierTransform> transform_for(const PeriodicGrid& g) {
  return std::make_shared<const FourierTransform>(g);
}

const ReactionRhs kNoReaction = [](const std::vector<Field>& f, std::vector<Field>& out) {
  out.assign(f.size(), Field(f[0].size(), 0.0));
};

Field random_field(std::size_t n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Field f(n);
  for (double& v : f) v = u(gen);
  return f;
}

// O(N^2) periodic sum with the kernel spread onto a dense offset table.
Field brute_convolution(const Field& f, const DiscretizedKernel& dk) {
  const auto& g = dk.grid;
  const int n = g.points_per_axis;
  Field dense(g.size(), 0.0);
  for (std::size_t k = 0; k < dk.size(); ++k)
    dense[g.flat_index(dk.offsets[k][0], dk.offsets[k][1])] += dk.weights[k];
  Field out(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto xi = g.multi_index(i);
    for (std::size_t j = 0; j < g.size(); ++j) {
      const auto yj = g.multi_index(j);
      const std::size_t o = g.flat_index((xi[0] - yj[0] + n) % n, (xi[1] - yj[1] + n) % n);
      out[i] += dense[o] * f[j] * g.cell_volume();
    }
  }
  return out;
}

}  // namespace

TEST(Spectral, CrankNicolsonFactors) {
  const auto g = make_grid(1, 512, 2 * kPi);
  const auto t = transform_for(g);
  const auto f = cn_diffusion_factors(1.0, 1e-3, *t);
  EXPECT_EQ(f[0], 1.0);
  EXPECT_NEAR(f[1], (1 - 5e-4) / (1 + 5e-4), 1e-15);
  EXPECT_NEAR(f[1], 0.99900050, 1e-8);
  const auto stiff = cn_diffusion_factors(1e6, 1.0, *t);
  for (std::size_t m = 1; m < stiff.size(); ++m) {
    EXPECT_LT(std::abs(stiff[m]), 1.0);
    EXPECT_LT(stiff[m], -0.99);
  }
}

TEST(Spectral, BootstrapSubstepCount) {
  const auto g = make_grid(1, 16, 2 * kPi);
  ImexIntegrator integ(transform_for(g), {1.0}, 1e-3);
  EXPECT_EQ(integ.bootstrap_substeps(), 1000);
  ImexIntegrator coarse(transform_for(g), {1.0}, 0.3);
  EXPECT_EQ(coarse.bootstrap_substeps(), 4);
}

TEST(Spectral, ConstantFieldStaysConstant) {
  const auto g = make_grid(2, 16, 2 * kPi);
  ImexIntegrator integ(transform_for(g), {1.0, 0.1}, 1e-2);
  auto s = integ.bootstrap({Field(g.size(), 2.5), Field(g.size(), 0.5)}, kNoReaction);
  for (int i = 0; i < 20; ++i) integ.step(s, kNoReaction);
  for (double v : s.fields[0]) EXPECT_NEAR(v, 2.5, 1e-14);
  for (double v : s.fields[1]) EXPECT_NEAR(v, 0.5, 1e-14);
  EXPECT_EQ(s.step, 21);
  EXPECT_NEAR(s.time, 0.21, 1e-15);
}

TEST(Spectral, SingleModeMatchesFactorPerStep) {
  const auto g = make_grid(1, 64, 2 * kPi);
  const double D = 0.7, dt = 1e-3;
  const int k = 3;
  Field f(64);
  for (int i = 0; i < 64; ++i) f[i] = std::cos(k * g.coordinate(i));
  ImexIntegrator integ(transform_for(g), {D}, dt);
  auto s = integ.bootstrap({f}, kNoReaction);
  // Bootstrap: product of backward-Euler factors.
  const double lambda = k * k;
  double amp = 1.0;
  const long sub = integ.bootstrap_substeps();
  for (long j = 0; j < sub; ++j) {
    const double tau = j + 1 < sub ? dt * dt : dt - dt * dt * (sub - 1);
    amp /= 1.0 + tau * D * lambda;
  }
  EXPECT_NEAR(s.fields[0][0], amp, 1e-13);
  // Sub-step error is about (D lambda)^2 dt^3 / 2.
  EXPECT_NEAR(amp, std::exp(-D * lambda * dt), 1e-7);
  const double factor = (1 - 0.5 * dt * D * lambda) / (1 + 0.5 * dt * D * lambda);
  for (int n = 0; n < 50; ++n) {
    integ.step(s, kNoReaction);
    amp *= factor;
  }
  for (int i = 0; i < 64; ++i) EXPECT_NEAR(s.fields[0][i], amp * f[i], 1e-13);
}

TEST(Spectral, PureDiffusionSpectralAccuracy) {
  const auto g = make_grid(1, 512, 2 * kPi);
  // Lowest mode: the Crank-Nicolson phase error grows like k^6.
  const double D = 1.0, dt = 1e-3;
  const int k = 1;
  Field f(512);
  for (int i = 0; i < 512; ++i) f[i] = std::sin(k * g.coordinate(i));
  ImexIntegrator integ(transform_for(g), {D}, dt);
  auto s = integ.bootstrap({f}, kNoReaction);
  while (s.step < 1000) integ.step(s, kNoReaction);
  const double exact = std::exp(-D * k * k * 1.0);
  double err = 0.0;
  for (int i = 0; i < 512; ++i) err = std::max(err, std::abs(s.fields[0][i] - exact * f[i]));
  EXPECT_LT(err / exact, 1e-5);
}

TEST(Spectral, ScalarAdamsBashforthRecurrence) {
  const auto g = make_grid(1, 8, 2 * kPi);
  const double lambda = 2.0, dt = 0.01;
  const ReactionRhs decay = [&](const std::vector<Field>& f, std::vector<Field>& out) {
    out.assign(1, Field(f[0].size()));
    for (std::size_t i = 0; i < f[0].size(); ++i) out[0][i] = -lambda * f[0][i];
  };
  ImexIntegrator integ(transform_for(g), {0.0}, dt);
  auto s = integ.bootstrap({Field(8, 1.0)}, decay);
  // Oracle: forward Euler sub-steps, then the AB2 recurrence with N[rho(0)] history.
  double rho = 1.0;
  const long sub = integ.bootstrap_substeps();
  for (long j = 0; j < sub; ++j) {
    const double tau = j + 1 < sub ? dt * dt : dt - dt * dt * (sub - 1);
    rho += tau * (-lambda * rho);
  }
  double prev = 1.0;
  for (int n = 0; n < 100; ++n) {
    const double next = rho + dt * (-1.5 * lambda * rho + 0.5 * lambda * prev);
    prev = rho;
    rho = next;
    integ.step(s, decay);
    for (double v : s.fields[0]) ASSERT_NEAR(v, rho, 1e-14);
  }
}

TEST(Spectral, DiffusionConservesMass) {
  const auto g = make_grid(1, 128, 2 * kPi);
  std::mt19937_64 gen(7);
  const Field f = random_field(128, gen);
  ImexIntegrator integ(transform_for(g), {0.3}, 1e-3);
  auto s = integ.bootstrap({f}, kNoReaction);
  for (int i = 0; i < 200; ++i) integ.step(s, kNoReaction);
  EXPECT_NEAR(field_integral(s.fields[0], g), field_integral(f, g), 1e-13);
}

TEST(Spectral, NonFiniteFieldAborts) {
  const auto g = make_grid(1, 8, 2 * kPi);
  ImexIntegrator integ(transform_for(g), {1.0}, 0.1);
  const ReactionRhs blowup = [](const std::vector<Field>& f, std::vector<Field>& out) {
    out.assign(1, Field(f[0].size(), std::numeric_limits<double>::infinity()));
  };
  auto s = integ.bootstrap({Field(8, 1.0)}, kNoReaction);
  try {
    integ.step(s, blowup);
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("step 2"), std::string::npos);
  }
}

TEST(Convolution, ConstantAndIdentity) {
  const auto g = make_grid(1, 64, 2 * kPi);
  const auto dk = discretize_kernel({KernelKind::Doi, 1.7, 0.4, 1}, g);
  for (double v : circular_convolution(Field(64, 2.0), dk)) EXPECT_NEAR(v, 3.4, 1e-13);
  DiscretizedKernel id;
  id.grid = g;
  id.offsets = {{0, 0}};
  id.weights = {1.0 / g.spacing()};
  std::mt19937_64 gen(3);
  const Field f = random_field(64, gen);
  const Field out = circular_convolution(f, id);
  for (int i = 0; i < 64; ++i) EXPECT_NEAR(out[i], f[i], 1e-15);
}

TEST(Convolution, MatchesBruteForceAndTransform) {
  std::mt19937_64 gen(11);
  for (int d : {1, 2}) {
    for (int n : {8, 16, 32}) {
      const auto g = make_grid(d, n, 2 * kPi);
      const auto t = transform_for(g);
      for (KernelKind kind : {KernelKind::Doi, KernelKind::Gaussian}) {
        const auto dk = discretize_kernel({kind, 1.0, 3.0 * g.spacing(), d}, g);
        const Field f = random_field(g.size(), gen);
        const Field ref = brute_convolution(f, dk);
        const Field direct = circular_convolution(f, dk);
        const Field spectral = SpectralConvolver(t, dk).apply(f);
        for (std::size_t i = 0; i < g.size(); ++i) {
          EXPECT_NEAR(direct[i], ref[i], 1e-12);
          EXPECT_NEAR(spectral[i], ref[i], 1e-12);
        }
      }
    }
  }
}

TEST(Spectral, PresetStaysBounded) {
  const auto g = make_grid(1, 512, 2 * kPi);
  const auto net = preset_reversible_abc(1, {1.0, 0.5, 0.1}, 1.0, 0.05, 2 * kPi / 64,
                                         KernelKind::Doi, {{0.5, 0.0}, {0.5, 1.0}});
  const auto init = sample_initial(default_initial_1d(), g);
  double bound = 0.0;
  for (const auto& f : init) bound = std::max(bound, sup_norm(f));
  for (auto model : {DeterministicModel::Local, DeterministicModel::Nonlocal}) {
    integrate(model, net, g, init, 1e-3, 1.0, save_schedule(1.0, 0.01, 1e-3),
              [&](std::size_t, double, const std::vector<Field>& f) {
                for (const auto& x : f) ASSERT_LE(sup_norm(x), 10 * bound);
              });
  }
}
