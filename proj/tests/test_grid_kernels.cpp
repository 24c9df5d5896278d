#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "nlrd/experiments.hpp"
#include "nlrd/grid.hpp"
#include "nlrd/kernels.hpp"

using namespace nlrd;

namespace {

constexpr double kPi = std::numbers::pi;

Kernel doi(double k, double eps, int d = 1) { return {KernelKind::Doi, k, eps, d}; }
Kernel gaussian(double k, double eps, int d = 1) { return {KernelKind::Gaussian, k, eps, d}; }

// Composite Simpson rule on [a, b] with n (even) panels.
template <class F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST(Grid, DefaultGrids) {
  const auto g1 = make_grid(1, 512, 2 * kPi);
  EXPECT_DOUBLE_EQ(g1.spacing(), 2 * kPi / 512);
  EXPECT_EQ(g1.size(), 512u);
  const auto g2 = make_grid(2, 256, 2 * kPi);
  EXPECT_EQ(g2.size(), 256u * 256u);
  EXPECT_EQ(g2.flat_index(1, 2), 258u);
  EXPECT_EQ(g2.flat_index(-1, 0), 255u * 256u);
}

TEST(Grid, RejectsNonPowerOfTwo) {
  EXPECT_THROW(make_grid(1, 500, 2 * kPi), std::invalid_argument);
  EXPECT_THROW(make_grid(3, 8, 1.0), std::invalid_argument);
  EXPECT_THROW(make_grid(1, 8, 0.0), std::invalid_argument);
}

TEST(Grid, FieldIntegralConstantAndZero) {
  const auto g = make_grid(1, 64, 2 * kPi);
  EXPECT_NEAR(field_integral(Field(64, 3.0), g), 6 * kPi, 1e-13);
  EXPECT_EQ(field_integral(Field(64, 0.0), g), 0.0);
}

TEST(Grid, FieldIntegralOfGaussianBump) {
  const auto g = make_grid(1, 512, 2 * kPi);
  Field f(512);
  for (int i = 0; i < 512; ++i) f[i] = std::exp(-10.0 * std::pow(g.coordinate(i) - 1.0, 2));
  // The sampled bump is not periodic: it jumps by e^-10 at x = 0 and misses the
  // tail below 0. Oracle: Simpson over [0, 2 pi] plus the endpoint correction
  // that turns the trapezoid sum into the periodic sum.
  const auto bump = [](double x) { return std::exp(-10.0 * std::pow(x - 1.0, 2)); };
  const double oracle =
      simpson(bump, 0.0, 2 * kPi, 1 << 16) + 0.5 * g.spacing() * (bump(0.0) - bump(2 * kPi));
  EXPECT_NEAR(field_integral(f, g), oracle, 1e-7);
  EXPECT_NEAR(field_integral(f, g), std::sqrt(kPi / 10), 5e-6);
}

TEST(Kernels, PointValues) {
  EXPECT_DOUBLE_EQ(kernel_eval(doi(1, 0.5), 0.25), 1.0);
  EXPECT_EQ(kernel_eval(doi(1, 0.5), 0.6), 0.0);
  EXPECT_NEAR(kernel_eval(gaussian(1, 1), 0.0), 0.3989423, 1e-7);
  EXPECT_NEAR(kernel_eval(doi(1, 0.5, 2), Point{0.1, 0.1}), 1.0 / (kPi * 0.25), 1e-15);
  const Kernel constant{KernelKind::Constant, 0.05, 0.0, 1};
  EXPECT_THROW(kernel_eval(constant, 0.0), std::invalid_argument);
  EXPECT_THROW(kernel_mass(constant), std::invalid_argument);
}

TEST(Kernels, MassMatchesQuadrature) {
  EXPECT_EQ(kernel_mass(doi(1, 0.3)), 1.0);
  const Kernel g = gaussian(2, 0.1);
  const double q = simpson([&](double w) { return kernel_eval(g, w); }, -2.0, 2.0, 40000);
  EXPECT_NEAR(q, 2.0, 1e-12);
  EXPECT_NEAR(kernel_mass(g), 2.0, 1e-15);
}

TEST(Kernels, SecondMoments) {
  const double e = 0.37;
  EXPECT_NEAR(kernel_second_moment(doi(1, e)), e * e / 3, 1e-15);
  EXPECT_NEAR(kernel_second_moment(gaussian(1, e)), e * e, 1e-15);
  EXPECT_NEAR(kernel_second_moment(doi(1, e, 2)), e * e / 2, 1e-15);
  // Quadrature cross-check of the 1d Doi moment.
  const Kernel k = doi(1, e);
  const double q = simpson([&](double w) { return kernel_eval(k, w) * w * w; }, -e, e, 1000);
  EXPECT_NEAR(q, e * e / 3, 1e-12);
}

class DiscretizeAll : public ::testing::TestWithParam<std::tuple<KernelKind, int, int>> {};

TEST_P(DiscretizeAll, MassExactAndSymmetric) {
  const auto [kind, dim, level] = GetParam();
  const int n = dim == 1 ? 512 : 64;
  const auto grid = make_grid(dim, n, 2 * kPi);
  const Kernel k{kind, 1.3, 2 * kPi * std::ldexp(1.0, -level), dim};
  const auto dk = discretize_kernel(k, grid);
  EXPECT_NEAR(dk.mass(), 1.3, 1e-12);
  std::map<Offset, double> w;
  for (std::size_t i = 0; i < dk.size(); ++i) {
    EXPECT_GE(dk.weights[i], 0.0);
    w[dk.offsets[i]] = dk.weights[i];
  }
  for (const auto& [o, v] : w) {
    auto it = w.find(Offset{-o[0], -o[1]});
    ASSERT_NE(it, w.end());
    EXPECT_NEAR(it->second, v, 1e-14 * v);
  }
}

INSTANTIATE_TEST_SUITE_P(
    Kinds, DiscretizeAll,
    ::testing::Combine(::testing::Values(KernelKind::Doi, KernelKind::Gaussian),
                       ::testing::Values(1, 2), ::testing::Values(2, 3, 4, 5, 6, 7)));

TEST(Kernels, TinyDoiIsSingleCell) {
  const auto grid = make_grid(1, 512, 2 * kPi);
  const double h = grid.spacing();
  const auto dk = discretize_kernel(doi(1, 0.3 * h), grid);
  ASSERT_EQ(dk.size(), 1u);
  EXPECT_EQ(dk.offsets[0], (Offset{0, 0}));
  EXPECT_NEAR(dk.weights[0], 1.0 / h, 1e-12);
}

TEST(Kernels, GaussianTruncationTail) {
  const auto grid = make_grid(1, 512, 2 * kPi);
  const double eps = std::ldexp(1.0, -4) * 2 * kPi;
  const auto dk = discretize_kernel(gaussian(1, eps), grid);
  const double reach = dk.support_radius * grid.spacing();
  EXPECT_GE(reach, 6 * eps);
  // Omitted continuous tail mass beyond the support.
  EXPECT_LT(std::erfc(reach / (std::sqrt(2.0) * eps)), 1e-12);
}

TEST(Kernels, DoiWiderThanDomainRejected) {
  const auto grid = make_grid(1, 64, 2 * kPi);
  EXPECT_THROW(discretize_kernel(doi(1, 4.0), grid), std::invalid_argument);
}

TEST(Kernels, SecondMomentScalesByFour) {
  for (int d : {1, 2}) {
    const int n = d == 1 ? 512 : 256;
    const auto grid = make_grid(d, n, 2 * kPi);
    const double h = grid.spacing();
    for (KernelKind kind : {KernelKind::Doi, KernelKind::Gaussian}) {
      for (int level = 2; level <= 6; ++level) {
        const double eps = 2 * kPi * std::ldexp(1.0, -level);
        if (eps / 2 < 4 * h) continue;
        const auto wide = discretize_kernel({kind, 1, eps, d}, grid);
        // A kernel wrapped onto the torus no longer has the free-space moment.
        if (2 * wide.support_radius >= n) continue;
        const double m1 = wide.second_moment();
        const double m2 = discretize_kernel({kind, 1, eps / 2, d}, grid).second_moment();
        EXPECT_NEAR(m1 / m2, 4.0, 0.2) << "d=" << d << " eps=" << eps;
      }
    }
  }
}

TEST(Kernels, DetailedBalanceUnbinding) {
  const ConvexCombination place{{{0.3, 0.0}, {0.2, 0.5}, {0.5, 1.0}}};
  const auto doi_db = detailed_balance_unbinding(doi(1.0, 0.2), place, 0.05);
  EXPECT_EQ(doi_db.separation.kind, KernelKind::Doi);
  EXPECT_EQ(doi_db.separation.rate, 1.0);
  EXPECT_EQ(doi_db.separation.width, 0.2);
  EXPECT_DOUBLE_EQ(kernel_eval(doi_db.separation, 0.1), 1.0 / 0.4);
  const auto g_db = detailed_balance_unbinding(gaussian(2.0, 0.1), place, 0.05);
  EXPECT_NEAR(kernel_eval(g_db.separation, 0.0), 1.0 / std::sqrt(2 * kPi * 0.01), 1e-12);

  // Total mass of m2 over product positions on the grid: sum_i p_i * mass(rho).
  const auto grid = make_grid(1, 256, 2 * kPi);
  for (const auto& db : {doi_db, g_db}) {
    const auto rho = discretize_kernel(db.separation, grid);
    double total = 0.0;
    for (const auto& c : db.centers) total += c.weight * rho.mass();
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Kernels, ShiftedStencilKeepsMassAndMean) {
  const auto grid = make_grid(1, 128, 2 * kPi);
  const auto dk = discretize_kernel(doi(1.0, 0.5), grid);
  for (double beta : {0.0, 0.25, 0.5, 1.0}) {
    const auto s = shifted_stencil(dk, beta);
    EXPECT_NEAR(s.mass(), 1.0, 1e-13);
    double mean = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) mean += s.weights[i] * s.offsets[i][0];
    EXPECT_NEAR(mean, 0.0, 1e-12);
  }
  const auto zero = shifted_stencil(dk, 0.0);
  ASSERT_EQ(zero.size(), 1u);
  EXPECT_EQ(zero.offsets[0], (Offset{0, 0}));
}

TEST(Kernels, MollifierConstantAndLinear) {
  const auto grid = make_grid(1, 256, 2 * kPi);
  const TestFunction one = [](const Point&) { return 1.0; };
  const TestFunction lin = [](const Point& x) { return 0.3 * x[0] - 1.0; };
  for (KernelKind kind : {KernelKind::Doi, KernelKind::Gaussian}) {
    const Kernel k{kind, 1.0, 0.3, 1};
    EXPECT_LT(mollifier_residual(k, grid, one, one, 0.5), 1e-13);
    for (double alpha : {0.0, 0.5, 1.0}) EXPECT_LT(mollifier_residual(k, grid, lin, one, alpha), 1e-12);
  }
}

TEST(Kernels, MollifierSecondOrder) {
  const auto grid = make_grid(1, 512, 2 * kPi);
  const TestFunction f = [](const Point& x) { return std::sin(x[0]); };
  const TestFunction g = [](const Point& x) { return std::cos(x[0]); };
  std::vector<std::pair<double, double>> pts;
  for (int level = 3; level <= 6; ++level) {
    const double eps = 2 * kPi * std::ldexp(1.0, -level);
    pts.emplace_back(eps, mollifier_residual(gaussian(1, eps), grid, f, g, 0.5));
  }
  const double slope = fit_loglog_slope(pts);
  EXPECT_GE(slope, 1.8);
  EXPECT_LE(slope, 2.2);
}

TEST(Kernels, GaussianMollifierMatchesClosedForm) {
  // For f = sin, g = cos and a unit Gaussian of variance eps^2 the mollified
  // product is sin(2x) exp(-(1 + alpha)^2 eps^2 / 2) / 2.
  const auto grid = make_grid(1, 512, 2 * kPi);
  const TestFunction f = [](const Point& x) { return std::sin(x[0]); };
  const TestFunction g = [](const Point& x) { return std::cos(x[0]); };
  for (double alpha : {0.0, 0.5, 1.0})
    for (int level = 4; level <= 7; ++level) {
      const double eps = 2 * kPi * std::ldexp(1.0, -level);
      const double exact = 0.5 * (1.0 - std::exp(-(1 + alpha) * (1 + alpha) * eps * eps / 2));
      EXPECT_NEAR(mollifier_residual(gaussian(1, eps), grid, f, g, alpha), exact, 1e-6 * exact);
    }
}
