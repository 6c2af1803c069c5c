#pragma once

// Isotropic stationary covariance families parameterised by theta = (sigma2, alpha):
//
//   Exponential          k(r) = sigma2 exp(-alpha r)
//   SquaredExponential   k(r) = sigma2 exp(-alpha^2 r^2)
//   Matern(nu)           k(r) = sigma2 2^{1-nu} / Gamma(nu) (alpha r)^nu K_nu(alpha r)
//
// nu is structural (fixed and known); only sigma2 and alpha are parameters.
// Spectral densities use the convention k(u) = int k_hat(w) exp(i w.u) dw.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "gpmle/error.hpp"
#include "gpmle/specfun.hpp"

namespace gpmle {

enum class Family { Exponential, SquaredExponential, Matern };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::Exponential:
      return "exponential";
    case Family::SquaredExponential:
      return "gaussian";
    case Family::Matern:
      return "matern";
  }
  return "unknown";
}

inline Family family_from_string(std::string_view name) {
  if (name == "exponential") return Family::Exponential;
  if (name == "gaussian" || name == "squared_exponential") return Family::SquaredExponential;
  if (name == "matern") return Family::Matern;
  throw DomainError("unknown covariance family '" + std::string(name) + "'");
}

struct KernelSpec {
  Family family = Family::Exponential;
  double nu = 0.0;  // Matern smoothness; zero for the other families

  static KernelSpec exponential() { return {Family::Exponential, 0.0}; }
  static KernelSpec squared_exponential() { return {Family::SquaredExponential, 0.0}; }
  static KernelSpec matern(double nu) {
    KernelSpec s{Family::Matern, nu};
    s.validate();
    return s;
  }

  void validate() const {
    if (family == Family::Matern) {
      if (!std::isfinite(nu) || nu <= 0.0) throw DomainError("Matern smoothness nu must be > 0");
    } else if (nu != 0.0) {
      throw DomainError("nu is only meaningful for the Matern family");
    }
  }

  /// Smoothness used by the microergodic map (exponential is Matern 1/2).
  [[nodiscard]] double effective_nu() const { return family == Family::Exponential ? 0.5 : nu; }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

struct ParamVector {
  double sigma2 = 1.0;
  double alpha = 1.0;

  void validate() const {
    if (!std::isfinite(sigma2) || sigma2 <= 0.0) throw DomainError("sigma2 must be finite and > 0");
    if (!std::isfinite(alpha) || alpha <= 0.0) throw DomainError("alpha must be finite and > 0");
  }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

/// Optimisation box: sigma2 in [sigma2_lo, sigma2_hi], alpha in [alpha_inf, alpha_sup].
struct ParamBounds {
  double sigma2_lo = 1e-12;
  double sigma2_hi = 1e12;
  double alpha_inf = 0.1;
  double alpha_sup = 10.0;

  void validate() const {
    if (!(sigma2_lo > 0.0 && sigma2_lo < sigma2_hi && std::isfinite(sigma2_hi))) {
      throw DomainError("sigma2 bounds must satisfy 0 < lo < hi < inf");
    }
    if (!(alpha_inf > 0.0 && alpha_inf < alpha_sup && std::isfinite(alpha_sup))) {
      throw DomainError("alpha bounds must satisfy 0 < alpha_inf < alpha_sup < inf");
    }
  }
};

/// Number of covariance parameters, (sigma2, alpha).
inline constexpr std::size_t kNumParams = 2;
using ParamGradient = std::array<double, kNumParams>;

/// Kernel values below this are flushed to exactly zero.
inline constexpr double kUnderflowFloor = 1e-300;

/// A covariance family with its theta-independent constants precomputed.
class Kernel {
 public:
  explicit Kernel(KernelSpec spec) : spec_(spec) {
    spec_.validate();
    if (spec_.family != Family::Matern) return;
    const double nu = spec_.nu;
    log_norm_ = (1.0 - nu) * std::numbers::ln2 - specfun::log_gamma(nu);
    half_order_ = specfun::detail::half_integer_order(nu);
    if (half_order_ >= 0) {
      // k / sigma2 = exp(-z) sum_j poly_[j] z^j  with  poly_[m-k] = C (m+k)! / (k! (m-k)!) 2^-k
      const int m = half_order_;
      const double c = std::exp(log_norm_ + 0.5 * std::log(std::numbers::pi / 2.0));
      poly_.assign(static_cast<std::size_t>(m) + 1, 0.0);
      double a = 1.0;
      for (int k = 0; k <= m; ++k) {
        poly_[static_cast<std::size_t>(m - k)] = c * a;
        a *= static_cast<double>((m + k + 1) * (m - k)) / (k + 1) * 0.5;
      }
    }
  }

  [[nodiscard]] const KernelSpec& spec() const { return spec_; }

  /// k_theta(r); the Matern value at r = 0 is its continuous extension sigma2.
  [[nodiscard]] double operator()(const ParamVector& theta, double r) const {
    return theta.sigma2 * correlation(theta.alpha, r);
  }

  /// k_theta(r) / sigma2.
  [[nodiscard]] double correlation(double alpha, double r) const {
    if (r == 0.0) return 1.0;
    const double z = alpha * r;
    double v = 0.0;
    switch (spec_.family) {
      case Family::Exponential:
        v = std::exp(-z);
        break;
      case Family::SquaredExponential:
        v = std::exp(-z * z);
        break;
      case Family::Matern:
        if (half_order_ >= 0) {
          v = std::exp(-z) * horner(z);
        } else {
          const double log_v = log_norm_ + spec_.nu * std::log(z) +
                               std::log(specfun::detail::bessel_k_scaled_unchecked(spec_.nu, z)) - z;
          v = std::exp(log_v);
        }
        break;
    }
    return v < kUnderflowFloor ? 0.0 : v;
  }

  /// (dk/dsigma2, dk/dalpha) at (theta, r).
  [[nodiscard]] ParamGradient gradient(const ParamVector& theta, double r) const {
    const double corr = correlation(theta.alpha, r);
    if (r == 0.0) return {1.0, 0.0};
    const double z = theta.alpha * r;
    double dalpha = 0.0;
    switch (spec_.family) {
      case Family::Exponential:
        dalpha = -theta.sigma2 * r * corr;
        break;
      case Family::SquaredExponential:
        dalpha = -2.0 * theta.alpha * r * r * theta.sigma2 * corr;
        break;
      case Family::Matern:
        if (half_order_ >= 0) {
          const double e = std::exp(-z);
          dalpha = e < kUnderflowFloor ? 0.0 : theta.sigma2 * r * e * (horner_derivative(z) - horner(z));
        } else {
          // d/dz [z^nu K_nu(z)] = -z^nu K_{nu-1}(z), and K_{nu-1} = K_{|nu-1|}.
          const double order = std::abs(spec_.nu - 1.0);
          const double log_mag = log_norm_ + spec_.nu * std::log(z) +
                                 std::log(specfun::detail::bessel_k_scaled_unchecked(order, z)) - z;
          const double mag = std::exp(log_mag);
          dalpha = mag < kUnderflowFloor ? 0.0 : -theta.sigma2 * r * mag;
        }
        break;
    }
    return {corr, dalpha};
  }

 private:
  [[nodiscard]] double horner(double z) const {
    double acc = 0.0;
    for (auto it = poly_.rbegin(); it != poly_.rend(); ++it) acc = acc * z + *it;
    return acc;
  }

  [[nodiscard]] double horner_derivative(double z) const {
    double acc = 0.0;
    for (std::size_t j = poly_.size(); j-- > 1;) acc = acc * z + static_cast<double>(j) * poly_[j];
    return acc;
  }

  KernelSpec spec_;
  double log_norm_ = 0.0;
  int half_order_ = -1;
  std::vector<double> poly_;
};

/// k_theta(r) for a lag norm r >= 0.
inline double eval(const KernelSpec& spec, const ParamVector& theta, double r) {
  theta.validate();
  if (!(r >= 0.0)) throw DomainError("lag norm must be >= 0");
  return Kernel(spec)(theta, r);
}

/// Analytic (dk/dsigma2, dk/dalpha); dk/dalpha at r = 0 is 0.
inline ParamGradient grad_params(const KernelSpec& spec, const ParamVector& theta, double r) {
  theta.validate();
  if (!(r >= 0.0)) throw DomainError("lag norm must be >= 0");
  return Kernel(spec).gradient(theta, r);
}

/// Spectral density k_hat_theta(w) at |w| = omega_norm in dimension d.
inline double spectral_density(const KernelSpec& spec, const ParamVector& theta, double omega_norm, int d) {
  theta.validate();
  spec.validate();
  if (d < 1 || d > 3) throw DomainError("spectral_density supports d in {1, 2, 3}");
  if (!(omega_norm >= 0.0)) throw DomainError("omega_norm must be >= 0");
  const double half_d = 0.5 * d;
  const double a2 = theta.alpha * theta.alpha;
  const double w2 = omega_norm * omega_norm;
  if (spec.family == Family::SquaredExponential) {
    return theta.sigma2 * std::pow(2.0 * theta.alpha * std::sqrt(std::numbers::pi), -d) *
           std::exp(-w2 / (4.0 * a2));
  }
  const double nu = spec.effective_nu();
  const double log_val = std::log(theta.sigma2) + specfun::log_gamma(nu + half_d) + 2.0 * nu * std::log(theta.alpha) -
                         specfun::log_gamma(nu) - half_d * std::log(std::numbers::pi) -
                         (nu + half_d) * std::log(a2 + w2);
  return std::exp(log_val);
}

/// sigma2 * alpha^(2 nu), the consistently estimable combination under infill.
inline double microergodic(const ParamVector& theta, double nu) {
  theta.validate();
  if (!std::isfinite(nu) || nu <= 0.0) throw DomainError("nu must be > 0");
  return theta.sigma2 * std::pow(theta.alpha, 2.0 * nu);
}

}  // namespace gpmle
