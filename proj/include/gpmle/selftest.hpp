#pragma once

// Deterministic exact-identity checks, run by `gpmle selftest`.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gpmle/covariance.hpp"
#include "gpmle/mle.hpp"
#include "gpmle/simulate.hpp"
#include "gpmle/specfun.hpp"

namespace gpmle {

struct IdentityCheck {
  std::string name;
  double observed;   // worst deviation found
  double tolerance;  // pass iff observed <= tolerance
  [[nodiscard]] bool passed() const { return observed <= tolerance; }
};

/// Largest relative deviation of the general K_nu route from the half-integer closed forms.
inline double bessel_closed_form_deviation() {
  double worst = 0.0;
  for (int m = 0; m <= 2; ++m) {
    for (double x = 0.01; x <= 100.0; x *= 1.1) {
      const double general = specfun::detail::bessel_k_scaled_general(m + 0.5, x);
      const double closed = specfun::detail::bessel_k_half_scaled(m, x);
      worst = std::max(worst, std::abs(general - closed) / closed);
    }
  }
  return worst;
}

inline std::vector<IdentityCheck> run_selftest() {
  std::vector<IdentityCheck> out;
  const Design grid = gen_increasing(10, 1, 1.0, 0.0, SeedSpec{});
  const ParamVector theta{1.0, 0.5};

  for (const KernelSpec& spec : {KernelSpec::exponential(), KernelSpec::matern(1.5)}) {
    const std::string tag(to_string(spec.family));
    const ParamGradient es = expected_score(spec, theta, grid);
    out.push_back({"expected_score_zero_" + tag, std::max(std::abs(es[0]), std::abs(es[1])), 1e-9});

    const double n = static_cast<double>(grid.size());
    const Eigen::Matrix2d sc = score_cov(spec, theta, grid);
    const FisherMatrix fm = fisher_matrix(spec, theta, grid);
    out.push_back({"score_cov_equals_4_over_n_fisher_" + tag, (sc - (4.0 / n) * fm.sigma).cwiseAbs().maxCoeff(), 1e-12});

    const double v = var_Ln(spec, theta, theta, grid);
    out.push_back({"var_Ln_at_theta0_is_2_over_n_" + tag, std::abs(v - 2.0 / n) / (2.0 / n), 1e-12});
  }

  double worst = 0.0;
  const Kernel expo(KernelSpec::exponential());
  const Kernel half(KernelSpec::matern(0.5));
  for (double s2 : {0.5, 1.0, 3.0}) {
    for (double a : {0.1, 1.0, 7.0}) {
      for (double r = 0.0; r <= 20.0; r += 0.25) {
        worst = std::max(worst, std::abs(expo({s2, a}, r) - half({s2, a}, r)));
      }
    }
  }
  out.push_back({"matern_half_equals_exponential", worst, 1e-12});
  out.push_back({"bessel_half_integer_closed_forms", bessel_closed_form_deviation(), 1e-10});
  return out;
}

}  // namespace gpmle
