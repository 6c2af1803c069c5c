#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "gpmle/covariance.hpp"
#include "oracles.hpp"

using namespace gpmle;

namespace {

const std::vector<KernelSpec>& all_specs() {
  static const std::vector<KernelSpec> specs{KernelSpec::exponential(), KernelSpec::squared_exponential(),
                                             KernelSpec::matern(0.5),   KernelSpec::matern(1.5),
                                             KernelSpec::matern(2.5),   KernelSpec::matern(0.8),
                                             KernelSpec::matern(1.0),   KernelSpec::matern(3.3)};
  return specs;
}

double surface_area(int d) {
  return d == 1 ? 2.0 : d == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
}

}  // namespace

TEST(Kernel, WorkedValues) {
  EXPECT_EQ(eval(KernelSpec::exponential(), {2.0, 1.0}, 0.0), 2.0);
  EXPECT_NEAR(eval(KernelSpec::exponential(), {1.0, 1.0}, 1.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(eval(KernelSpec::exponential(), {1.0, 1.0}, 1.0), 0.3678794, 1e-7);
  EXPECT_NEAR(eval(KernelSpec::matern(1.5), {1.0, 2.0}, 1.0), 3.0 * std::exp(-2.0), 1e-15);
  EXPECT_NEAR(eval(KernelSpec::matern(1.5), {1.0, 2.0}, 1.0), 0.4060058, 1e-7);
  EXPECT_NEAR(eval(KernelSpec::squared_exponential(), {1.5, 2.0}, 0.5), 1.5 * std::exp(-1.0), 1e-15);
}

TEST(Kernel, MaternClosedFormsAndDefinition) {
  for (double r = 0.0; r < 12.0; r += 0.173) {
    for (double a : {0.3, 1.0, 2.7}) {
      const double z = a * r;
      EXPECT_NEAR(eval(KernelSpec::matern(2.5), {1.7, a}, r), 1.7 * (1.0 + z + z * z / 3.0) * std::exp(-z), 1e-14);
      for (double nu : {0.8, 1.0, 3.3}) {
        const double ref = oracle::matern(1.7, a, nu, r);
        EXPECT_NEAR(eval(KernelSpec::matern(nu), {1.7, a}, r), ref, 1e-10 * 1.7) << "nu=" << nu << " r=" << r;
      }
    }
  }
}

TEST(Kernel, MaternHalfIsExponential) {
  const Kernel expo(KernelSpec::exponential());
  const Kernel half(KernelSpec::matern(0.5));
  for (double s2 : {0.2, 1.0, 9.0}) {
    for (double a : {0.1, 1.0, 10.0}) {
      for (double r = 0.0; r < 30.0; r += 0.11) EXPECT_NEAR(expo({s2, a}, r), half({s2, a}, r), 1e-12);
    }
  }
}

TEST(Kernel, ValueAtZeroIsVarianceAndDecreasing) {
  for (const auto& spec : all_specs()) {
    const Kernel k(spec);
    EXPECT_DOUBLE_EQ(k({3.5, 0.7}, 0.0), 3.5);
    double prev = 3.5;
    for (double r = 0.05; r < 20.0; r += 0.05) {
      const double v = k({3.5, 0.7}, r);
      EXPECT_LE(v, prev);
      EXPECT_GE(v, 0.0);
      prev = v;
    }
  }
}

TEST(Kernel, UnderflowIsExactZero) {
  for (const auto& spec : all_specs()) {
    EXPECT_EQ(eval(spec, {1.0, 10.0}, 1e4), 0.0) << to_string(spec.family);
    const auto g = grad_params(spec, {1.0, 10.0}, 1e4);
    EXPECT_EQ(g[0], 0.0);
    EXPECT_EQ(g[1], 0.0);
  }
}

TEST(Kernel, DomainErrors) {
  EXPECT_THROW(eval(KernelSpec::exponential(), {-1.0, 1.0}, 1.0), DomainError);
  EXPECT_THROW(eval(KernelSpec::exponential(), {1.0, 0.0}, 1.0), DomainError);
  EXPECT_THROW(eval(KernelSpec::exponential(), {1.0, 1.0}, -0.1), DomainError);
  EXPECT_THROW(KernelSpec::matern(0.0), DomainError);
  EXPECT_THROW(KernelSpec::matern(-1.0), DomainError);
  EXPECT_THROW(Kernel(KernelSpec{Family::Exponential, 1.0}), DomainError);
  EXPECT_THROW(family_from_string("cauchy"), DomainError);
  EXPECT_EQ(family_from_string("matern"), Family::Matern);
}

TEST(Gradient, WorkedValues) {
  const auto g0 = grad_params(KernelSpec::exponential(), {1.0, 1.0}, 0.0);
  EXPECT_EQ(g0[0], 1.0);
  EXPECT_EQ(g0[1], 0.0);
  const auto g1 = grad_params(KernelSpec::exponential(), {2.0, 1.0}, 1.0);
  EXPECT_NEAR(g1[0], std::exp(-1.0), 1e-15);
  EXPECT_NEAR(g1[1], -2.0 * std::exp(-1.0), 1e-15);
}

TEST(Gradient, MatchesCentralDifferences) {
  for (const auto& spec : all_specs()) {
    const Kernel k(spec);
    for (const ParamVector th : {ParamVector{1.0, 1.0}, ParamVector{2.3, 0.4}, ParamVector{0.6, 3.1}}) {
      for (double r : {0.05, 0.3, 1.0, 2.2, 4.0}) {
        const auto g = k.gradient(th, r);
        const double h1 = 1e-6 * th.sigma2;
        const double h2 = 1e-6 * th.alpha;
        const double fd1 = (k({th.sigma2 + h1, th.alpha}, r) - k({th.sigma2 - h1, th.alpha}, r)) / (2.0 * h1);
        const double fd2 = (k({th.sigma2, th.alpha + h2}, r) - k({th.sigma2, th.alpha - h2}, r)) / (2.0 * h2);
        EXPECT_NEAR(g[0], fd1, 1e-5 * std::abs(fd1) + 1e-14) << to_string(spec.family) << " nu=" << spec.nu << " r=" << r;
        EXPECT_NEAR(g[1], fd2, 1e-5 * std::abs(fd2) + 1e-14) << to_string(spec.family) << " nu=" << spec.nu << " r=" << r;
      }
    }
  }
}

TEST(Gradient, VarianceComponentIsKernelOverSigma2) {
  for (const auto& spec : all_specs()) {
    const Kernel k(spec);
    for (double r : {0.0, 0.5, 3.0}) EXPECT_NEAR(k.gradient({2.5, 0.9}, r)[0], k({2.5, 0.9}, r) / 2.5, 1e-15);
  }
}

TEST(Spectral, WorkedValueAndFourierPair) {
  EXPECT_NEAR(spectral_density(KernelSpec::matern(0.5), {1.0, 1.0}, 0.0, 1), 1.0 / std::numbers::pi, 1e-15);
  for (double w : {0.0, 0.5, 3.0, 40.0}) {
    const double ref = 2.0 * 0.7 / (std::numbers::pi * (0.49 + w * w));
    EXPECT_NEAR(spectral_density(KernelSpec::exponential(), {2.0, 0.7}, w, 1), ref, 1e-14 * ref);
  }
}

TEST(Spectral, StrictlyPositive) {
  for (const auto& spec : all_specs()) {
    for (int d = 1; d <= 3; ++d) {
      for (double w = 0.0; w <= 50.0; w += 0.25) {
        EXPECT_GT(spectral_density(spec, {1.0, 2.0}, w, d), 0.0) << to_string(spec.family) << " d=" << d << " w=" << w;
      }
    }
  }
}

TEST(Spectral, IntegratesToVariance) {
  for (const auto& spec : all_specs()) {
    for (int d = 1; d <= 3; ++d) {
      // radial integral converges for Matern only when 2 nu > 0, always true; d = 3 with nu = 1/2 decays as w^-2
      const ParamVector th{1.3, 0.8};
      const double total = surface_area(d) * oracle::half_line_integral(
                                                 [&](double w) { return spectral_density(spec, th, w, d) * std::pow(w, d - 1); },
                                                 1e-10);
      const double tol = d == 1 ? 1e-6 : 1e-5;
      EXPECT_NEAR(total, eval(spec, th, 0.0), tol) << to_string(spec.family) << " nu=" << spec.nu << " d=" << d;
    }
  }
}

TEST(Spectral, GaussianInvertsAtPositiveLag) {
  const KernelSpec spec = KernelSpec::squared_exponential();
  const ParamVector th{1.0, 1.2};
  for (double r : {0.3, 1.0, 1.7}) {
    const double v = 2.0 * oracle::simpson([&](double w) { return spectral_density(spec, th, w, 1) * std::cos(w * r); },
                                           0.0, 60.0, 1e-12);
    EXPECT_NEAR(v, eval(spec, th, r), 1e-9);
  }
}

TEST(Spectral, DomainErrors) {
  EXPECT_THROW(spectral_density(KernelSpec::exponential(), {1.0, 1.0}, 1.0, 4), DomainError);
  EXPECT_THROW(spectral_density(KernelSpec::exponential(), {1.0, 1.0}, -1.0, 1), DomainError);
}

TEST(Microergodic, WorkedValues) {
  EXPECT_NEAR(microergodic({4.0, 0.5}, 0.5), 2.0, 1e-15);
  for (double nu : {0.5, 1.5, 2.5, 0.8}) EXPECT_EQ(microergodic({1.0, 1.0}, nu), 1.0);
}

TEST(Microergodic, EquivalentPairsShareValue) {
  for (double nu : {0.5, 1.5, 2.5}) {
    const ParamVector t0{1.7, 1.3};
    for (double a1 : {0.2, 2.0, 7.5}) {
      const ParamVector t1{t0.sigma2 * std::pow(t0.alpha, 2.0 * nu) / std::pow(a1, 2.0 * nu), a1};
      EXPECT_NEAR(microergodic(t1, nu), microergodic(t0, nu), 1e-14 * microergodic(t0, nu));
    }
  }
  EXPECT_THROW(microergodic({1.0, 1.0}, 0.0), DomainError);
}
