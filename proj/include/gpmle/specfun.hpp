#pragma once

// Special functions for the Matern family: modified Bessel function of the
// second kind K_nu and log-gamma.
//
// K_nu is evaluated as follows:
//   * half-integer nu = m + 1/2 (m <= kMaxHalfIntegerOrder): finite closed form
//       K_{m+1/2}(x) = sqrt(pi / 2x) e^{-x} sum_{k=0}^{m} (m+k)! / (k! (m-k)!) (2x)^{-k}
//   * otherwise nu = mu + l with |mu| <= 1/2: K_mu and K_{mu+1} from Temme's series
//     for x <= kTemmeCrossover and Steed's continued fraction (CF2) above it,
//     followed by the stable upward recurrence K_{v+1} = (2v/x) K_v + K_{v-1}.
//
// Everything is computed in the exponentially scaled form e^x K_nu(x) so that
// callers working in log space never see underflow.

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "gpmle/error.hpp"

namespace gpmle::specfun {

struct BesselAccuracy {
  double rel_tol = 1e-10;
};

/// Switch point between the Temme series and the continued fraction.
inline constexpr double kTemmeCrossover = 2.0;
inline constexpr int kMaxHalfIntegerOrder = 20;

namespace detail {

inline constexpr double kSeriesEps = 1e-17;
inline constexpr int kMaxIter = 100000;

// Taylor coefficients of 1/Gamma(z) = sum_k c_k z^k (c_1 = 1).
inline constexpr std::array<double, 14> kInvGammaCoeffs = {
    1.0,
    0.5772156649015329,
    -0.6558780715202538,
    -0.0420026350340952,
    0.1665386113822915,
    -0.0421977345555443,
    -0.0096219715278770,
    0.0072189432466630,
    -0.0011651675918591,
    -0.0002152416741149,
    0.0001280502823882,
    -0.0000201348547807,
    -0.0000012504934821,
    0.0000011330272320,
};

struct TemmeGammas {
  double gam1;   // (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)
  double gam2;   // (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2
  double gampl;  // 1/Gamma(1+mu)
  double gammi;  // 1/Gamma(1-mu)
};

/// Gamma-function combinations for |mu| <= 1/2 without cancellation near mu = 0.
inline TemmeGammas temme_gammas(double mu) {
  TemmeGammas g{};
  g.gampl = 1.0 / std::tgamma(1.0 + mu);
  g.gammi = 1.0 / std::tgamma(1.0 - mu);
  g.gam2 = 0.5 * (g.gammi + g.gampl);
  if (std::abs(mu) < 0.1) {
    // gam1 = -sum_{k even} c_k mu^{k-2}
    const double mu2 = mu * mu;
    double acc = 0.0;
    for (int k = 13; k >= 1; k -= 2) acc = acc * mu2 + kInvGammaCoeffs[static_cast<std::size_t>(k)];
    g.gam1 = -acc;
  } else {
    g.gam1 = (g.gammi - g.gampl) / (2.0 * mu);
  }
  return g;
}

/// (e^x K_mu(x), e^x K_{mu+1}(x)) for |mu| <= 1/2, x > 0.
inline std::pair<double, double> bessel_k_pair_scaled(double mu, double x) {
  constexpr double pi = std::numbers::pi;
  const double mu2 = mu * mu;
  const double xi = 1.0 / x;
  if (x <= kTemmeCrossover) {
    const double x2 = 0.5 * x;
    const double pimu = pi * mu;
    const double fact = std::abs(pimu) < kSeriesEps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = std::abs(e) < kSeriesEps ? 1.0 : std::sinh(e) / e;
    const TemmeGammas g = temme_gammas(mu);
    double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / g.gampl;
    double q = 0.5 / (e * g.gammi);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    for (int i = 1; i <= kMaxIter; ++i) {
      const double di = i;
      ff = (di * ff + p + q) / (di * di - mu2);
      c *= d / di;
      p /= di - mu;
      q /= di + mu;
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - di * ff);
      if (std::abs(del) < std::abs(sum) * kSeriesEps) break;
    }
    const double scale = std::exp(x);
    return {sum * scale, sum1 * 2.0 * xi * scale};
  }

  // Steed's method for CF2 (Temme's normalisation).
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  const double a1 = 0.25 - mu2;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 2; i <= kMaxIter; ++i) {
    a -= 2.0 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < kSeriesEps) break;
  }
  h *= a1;
  const double kmu = std::sqrt(pi / (2.0 * x)) / s;
  const double k1 = kmu * (mu + x + 0.5 - h) * xi;
  return {kmu, k1};
}

/// e^x K_nu(x) for any nu >= 0 by the Temme/Steed route (no closed forms).
inline double bessel_k_scaled_general(double nu, double x) {
  const int order = static_cast<int>(nu + 0.5);
  const double mu = nu - order;
  auto [kmu, k1] = bessel_k_pair_scaled(mu, x);
  const double two_over_x = 2.0 / x;
  for (int i = 1; i <= order; ++i) {
    const double next = (mu + i) * two_over_x * k1 + kmu;
    kmu = k1;
    k1 = next;
  }
  return kmu;
}

/// e^x K_{m+1/2}(x) from the terminating series.
inline double bessel_k_half_scaled(int m, double x) {
  // term_k = (m+k)! / (k! (m-k)!) (2x)^{-k}, built by ratio.
  double term = 1.0;
  double sum = 1.0;
  const double inv2x = 0.5 / x;
  for (int k = 0; k < m; ++k) {
    term *= static_cast<double>((m + k + 1) * (m - k)) / (k + 1) * inv2x;
    sum += term;
  }
  return std::sqrt(std::numbers::pi / (2.0 * x)) * sum;
}

/// m if nu == m + 1/2 exactly with m <= kMaxHalfIntegerOrder, else -1.
inline int half_integer_order(double nu) {
  const double m = nu - 0.5;
  if (m < 0.0 || m > kMaxHalfIntegerOrder || m != std::floor(m)) return -1;
  return static_cast<int>(m);
}

/// e^x K_nu(x) for nu >= 0 (K_{-nu} = K_nu is handled by the caller).
inline double bessel_k_scaled_unchecked(double nu, double x) {
  if (const int m = half_integer_order(nu); m >= 0) return bessel_k_half_scaled(m, x);
  return bessel_k_scaled_general(nu, x);
}

}  // namespace detail

/// Exponentially scaled K_nu: returns e^x K_nu(x).
inline double bessel_k_scaled(double nu, double x) {
  if (!std::isfinite(nu) || !std::isfinite(x) || nu <= 0.0 || x <= 0.0) {
    throw DomainError("bessel_k: requires finite nu > 0 and x > 0");
  }
  return detail::bessel_k_scaled_unchecked(nu, x);
}

/// Modified Bessel function of the second kind K_nu(x), nu > 0, x > 0.
inline double bessel_k(double nu, double x) { return bessel_k_scaled(nu, x) * std::exp(-x); }

/// Natural log of Gamma(x) for x > 0.
inline double log_gamma(double x) {
  if (!std::isfinite(x) || x <= 0.0) throw DomainError("log_gamma: requires finite x > 0");
  return std::lgamma(x);
}

}  // namespace gpmle::specfun
