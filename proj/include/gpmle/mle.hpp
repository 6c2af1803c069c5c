#pragma once

// Maximum likelihood for theta = (sigma2, alpha) with a known structural kernel.
//
// The criterion is the rescaled negative log-likelihood
//     L_n(theta) = (1/n) log|R_theta| + (1/n) y^T R_theta^{-1} y,
// minimised over sigma2 in closed form (profile) and over alpha by a bounded
// one-dimensional Brent search. Fisher, score-covariance and identifiability
// quantities are exact trace formulas evaluated through Cholesky solves.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpmle/covariance.hpp"
#include "gpmle/design.hpp"
#include "gpmle/error.hpp"
#include "gpmle/gausslin.hpp"

namespace gpmle {

namespace detail {

inline std::string describe(const ParamVector& t) {
  std::ostringstream os;
  os.precision(17);
  os << "sigma2=" << t.sigma2 << ", alpha=" << t.alpha;
  return os.str();
}

inline CholFactor factor_at(const Kernel& kernel, const ParamVector& theta, const Matrix& dist, CholPolicy policy) {
  try {
    return chol(build_cov(kernel, theta, dist), policy);
  } catch (const NotPositiveDefinite& e) {
    throw NotPositiveDefinite(e.pivot, "theta: " + describe(theta));
  }
}

inline void check_obs(const Design& design, const Vector& y) {
  if (static_cast<std::size_t>(y.size()) != design.size()) throw DimensionMismatch("length(y) != number of design points");
  if (y.size() == 0) throw DimensionMismatch("empty observation vector");
}

/// A_m = R^{-1} dR/dtheta_m for both parameters.
inline std::array<Matrix, kNumParams> whitened_gradients(const Kernel& kernel, const ParamVector& theta,
                                                         const Matrix& dist, const CholFactor& factor) {
  auto d = build_cov_gradients(kernel, theta, dist);
  for (auto& m : d) m = solve(factor, m);
  return d;
}

}  // namespace detail

/// L_n from an existing factor of R_theta.
inline double criterion_from_factor(const CholFactor& factor, const Vector& y) {
  const double n = static_cast<double>(factor.size());
  return (factor.logdet() + quad_form_inv(factor, y)) / n;
}

inline double criterion_Ln(const KernelSpec& spec, const ParamVector& theta, const Design& design, const Vector& y,
                           CholPolicy policy = CholPolicy::Jitter) {
  theta.validate();
  detail::check_obs(design, y);
  return criterion_from_factor(detail::factor_at(Kernel(spec), theta, pairwise_distances(design), policy), y);
}

/// Analytic gradient (dL_n/dsigma2, dL_n/dalpha).
inline ParamGradient grad_Ln(const KernelSpec& spec, const ParamVector& theta, const Design& design, const Vector& y,
                             CholPolicy policy = CholPolicy::Jitter) {
  theta.validate();
  detail::check_obs(design, y);
  const Kernel kernel(spec);
  const Matrix dist = pairwise_distances(design);
  const CholFactor factor = detail::factor_at(kernel, theta, dist, policy);
  const Vector w = solve(factor, y);  // R^{-1} y
  const auto d = build_cov_gradients(kernel, theta, dist);
  const double n = static_cast<double>(design.size());
  ParamGradient g{};
  for (std::size_t m = 0; m < kNumParams; ++m) {
    const Matrix a = solve(factor, d[m]);
    g[m] = (a.trace() - w.dot(d[m] * w)) / n;
  }
  return g;
}

/// E[grad L_n] under theta as the truth; zero up to rounding.
inline ParamGradient expected_score(const KernelSpec& spec, const ParamVector& theta, const Design& design,
                                    CholPolicy policy = CholPolicy::Jitter) {
  theta.validate();
  const Kernel kernel(spec);
  const Matrix dist = pairwise_distances(design);
  const CovMatrix cov = build_cov(kernel, theta, dist);
  const CholFactor factor = chol(cov, policy);
  const Matrix rinv_r = solve(factor, cov.entries);
  const auto a = detail::whitened_gradients(kernel, theta, dist, factor);
  const double n = static_cast<double>(design.size());
  ParamGradient g{};
  for (std::size_t m = 0; m < kNumParams; ++m) g[m] = (a[m].trace() - trace_of_product(a[m], rinv_r)) / n;
  return g;
}

/// var(L_n(theta)) when y ~ N(0, R_theta0): (2/n^2) tr(R_theta^{-1} R_0 R_theta^{-1} R_0).
inline double var_Ln(const KernelSpec& spec, const ParamVector& theta, const ParamVector& theta0, const Design& design,
                     CholPolicy policy = CholPolicy::Jitter) {
  theta.validate();
  theta0.validate();
  const Kernel kernel(spec);
  const Matrix dist = pairwise_distances(design);
  const CholFactor factor = detail::factor_at(kernel, theta, dist, policy);
  const Matrix b = solve(factor, build_cov(kernel, theta0, dist).entries);
  const double n = static_cast<double>(design.size());
  return 2.0 * trace_of_product(b, b) / (n * n);
}

/// sigma2_hat = y^T Sigma^{-1} y / n from a factor of the unit-variance matrix Sigma_alpha.
inline double profile_sigma2_from_factor(const CholFactor& unit_factor, const Vector& y) {
  if (y.size() == 0 || y.isZero(0.0)) throw DomainError("profile_sigma2: observation vector is identically zero");
  return quad_form_inv(unit_factor, y) / static_cast<double>(y.size());
}

/// Closed-form minimiser of sigma2 -> L_n(sigma2, alpha).
inline double profile_sigma2(const KernelSpec& spec, double alpha, const Design& design, const Vector& y,
                             CholPolicy policy = CholPolicy::Jitter) {
  const ParamVector unit{1.0, alpha};
  unit.validate();
  detail::check_obs(design, y);
  return profile_sigma2_from_factor(detail::factor_at(Kernel(spec), unit, pairwise_distances(design), policy), y);
}

struct FitResult {
  ParamVector theta_hat;
  double criterion = 0.0;
  double microergodic_hat = 0.0;  // NaN for families without a microergodic map
  std::size_t n_evals = 0;
  bool at_alpha_inf = false;
  bool at_alpha_sup = false;
  bool sigma2_clamped = false;
  double jitter_used = 0.0;
};

struct BrentResult {
  double x;
  double fx;
};

/// Bounded scalar minimisation: golden section with parabolic refinement.
/// Stops once the bracket is within 2 * (sqrt(eps) |x| + xtol / 3).
template <typename F>
BrentResult brent_minimize(F&& f, double lo, double hi, double xtol, int max_iter = 500) {
  constexpr double golden = 0.3819660112501051;  // (3 - sqrt(5)) / 2
  const double rel = std::sqrt(std::numeric_limits<double>::epsilon());
  double a = lo;
  double b = hi;
  double x = a + golden * (b - a);
  double w = x;
  double v = x;
  double fx = f(x);
  double fw = fx;
  double fv = fx;
  double d = 0.0;
  double e = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    const double xm = 0.5 * (a + b);
    const double tol1 = rel * std::abs(x) + xtol / 3.0;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;
    bool golden_step = true;
    if (std::abs(e) > tol1 && std::isfinite(fx) && std::isfinite(fw) && std::isfinite(fv)) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double etemp = e;
      e = d;
      if (!(std::abs(p) >= std::abs(0.5 * q * etemp) || p <= q * (a - x) || p >= q * (b - x))) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = std::copysign(tol1, xm - x);
        golden_step = false;
      }
    }
    if (golden_step) {
      e = (x >= xm) ? a - x : b - x;
      d = golden * e;
    }
    const double u = x + (std::abs(d) >= tol1 ? d : std::copysign(tol1, d));
    const double fu = f(u);
    if (fu <= fx) {
      if (u >= x) {
        a = x;
      } else {
        b = x;
      }
      v = w;
      fv = fw;
      w = x;
      fw = fx;
      x = u;
      fx = fu;
    } else {
      if (u < x) {
        a = u;
      } else {
        b = u;
      }
      if (fu <= fw || w == x) {
        v = w;
        fv = fw;
        w = u;
        fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u;
        fv = fu;
      }
    }
  }
  return {x, fx};
}

/// Profile likelihood in alpha for one (kernel, design, y); sigma2 is eliminated in closed form.
class ProfileLikelihood {
 public:
  ProfileLikelihood(const KernelSpec& spec, const Design& design, const Vector& y, ParamBounds bounds,
                    CholPolicy policy = CholPolicy::Jitter)
      : kernel_(spec), dist_(pairwise_distances(design)), y_(y), bounds_(bounds), policy_(policy) {
    bounds_.validate();
    detail::check_obs(design, y);
    if (y.isZero(0.0)) throw DomainError("profile likelihood: observation vector is identically zero");
  }

  struct Point {
    double alpha;
    double sigma2;
    double criterion;
    double jitter_used;
    bool sigma2_clamped;
  };

  /// L_n(sigma2_hat(alpha), alpha), with sigma2_hat clamped to the sigma2 bounds.
  [[nodiscard]] Point evaluate(double alpha) const {
    const CholFactor factor = detail::factor_at(kernel_, ParamVector{1.0, alpha}, dist_, policy_);
    const double n = static_cast<double>(y_.size());
    const double q = quad_form_inv(factor, y_);
    const double raw = q / n;
    const double s2 = std::clamp(raw, bounds_.sigma2_lo, bounds_.sigma2_hi);
    const double crit = std::log(s2) + factor.logdet() / n + q / (n * s2);
    return {alpha, s2, crit, factor.jitter_used(), s2 != raw};
  }

  [[nodiscard]] const Kernel& kernel() const { return kernel_; }
  [[nodiscard]] const ParamBounds& bounds() const { return bounds_; }

 private:
  Kernel kernel_;
  Matrix dist_;
  Vector y_;
  ParamBounds bounds_;
  CholPolicy policy_;
};

/// Relative alpha tolerance of the line search, as a fraction of alpha_sup - alpha_inf.
inline constexpr double kAlphaRelTol = 1e-8;

/// Full maximum likelihood over Theta = [sigma2 bounds] x [alpha_inf, alpha_sup].
///
/// The alpha range is split into `multistart` equal cells; a Brent search runs in
/// each and the cell midpoints are evaluated as the initial points. The lowest
/// criterion wins, ties going to the smallest alpha.
inline FitResult fit_full(const KernelSpec& spec, const Design& design, const Vector& y, const ParamBounds& bounds,
                          std::size_t multistart = 3, CholPolicy policy = CholPolicy::Jitter) {
  if (design.size() < 2) throw DomainError("fit_full needs at least two observations");
  if (multistart == 0) throw DomainError("multistart must be >= 1");
  const ProfileLikelihood profile(spec, design, y, bounds, policy);
  const double range = bounds.alpha_sup - bounds.alpha_inf;
  const double xtol = kAlphaRelTol * range;

  std::size_t evals = 0;
  std::vector<std::string> failures;
  bool have_best = false;
  ProfileLikelihood::Point best{};
  auto consider = [&](const ProfileLikelihood::Point& p) {
    if (!have_best || p.criterion < best.criterion || (p.criterion == best.criterion && p.alpha < best.alpha)) {
      best = p;
      have_best = true;
    }
  };
  auto objective = [&](double alpha) {
    ++evals;
    try {
      const auto p = profile.evaluate(alpha);
      consider(p);
      return p.criterion;
    } catch (const NotPositiveDefinite& e) {
      failures.emplace_back(e.what());
      return std::numeric_limits<double>::infinity();
    }
  };

  const double cell = range / static_cast<double>(multistart);
  for (std::size_t s = 0; s < multistart; ++s) {
    const double lo = bounds.alpha_inf + cell * static_cast<double>(s);
    const double hi = s + 1 == multistart ? bounds.alpha_sup : lo + cell;
    objective(0.5 * (lo + hi));
    brent_minimize(objective, lo, hi, xtol);
  }
  if (!have_best) {
    std::string msg = "fit_full: every likelihood evaluation failed (" + std::to_string(failures.size()) + " attempts)";
    for (std::size_t i = 0; i < std::min<std::size_t>(failures.size(), 5); ++i) msg += "; " + failures[i];
    throw FitError(msg);
  }

  FitResult fit;
  fit.theta_hat = {best.sigma2, best.alpha};
  fit.criterion = best.criterion;
  fit.microergodic_hat = spec.family == Family::SquaredExponential
                             ? std::numeric_limits<double>::quiet_NaN()
                             : microergodic(fit.theta_hat, spec.effective_nu());
  fit.n_evals = evals;
  const double edge = 1e-6 * range;
  fit.at_alpha_inf = best.alpha - bounds.alpha_inf <= edge;
  fit.at_alpha_sup = bounds.alpha_sup - best.alpha <= edge;
  fit.sigma2_clamped = best.sigma2_clamped;
  fit.jitter_used = best.jitter_used;
  return fit;
}

/// Sigma_theta0 with entries (1/2n) tr(R^{-1} dR_i R^{-1} dR_j); n Sigma is the Fisher information.
struct FisherMatrix {
  Eigen::Matrix2d sigma;
  std::size_t n = 0;
};

namespace detail {

/// T_ij = tr(R^{-1} dR_i R^{-1} dR_j).
inline Eigen::Matrix2d gradient_traces(const KernelSpec& spec, const ParamVector& theta, const Design& design,
                                       CholPolicy policy) {
  theta.validate();
  const Kernel kernel(spec);
  const Matrix dist = pairwise_distances(design);
  const CholFactor factor = factor_at(kernel, theta, dist, policy);
  const auto a = whitened_gradients(kernel, theta, dist, factor);
  Eigen::Matrix2d t;
  for (std::size_t i = 0; i < kNumParams; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = trace_of_product(a[i], a[j]);
      t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      t(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return t;
}

}  // namespace detail

inline FisherMatrix fisher_matrix(const KernelSpec& spec, const ParamVector& theta, const Design& design,
                                  CholPolicy policy = CholPolicy::Jitter) {
  const double n = static_cast<double>(design.size());
  return {detail::gradient_traces(spec, theta, design, policy) / (2.0 * n), design.size()};
}

/// cov(grad L_n(theta0)) = (2/n^2) tr(R^{-1} dR_i R^{-1} dR_j).
inline Eigen::Matrix2d score_cov(const KernelSpec& spec, const ParamVector& theta0, const Design& design,
                                 CholPolicy policy = CholPolicy::Jitter) {
  const double n = static_cast<double>(design.size());
  return detail::gradient_traces(spec, theta0, design, policy) * (2.0 / (n * n));
}

/// (1/n) sum_{i,j} (k_theta(s_i - s_j) - k_theta0(s_i - s_j))^2
inline double ident_global(const KernelSpec& spec, const ParamVector& theta, const ParamVector& theta0,
                           const Design& design) {
  theta.validate();
  theta0.validate();
  const Kernel kernel(spec);
  const std::size_t n = design.size();
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double diag = theta.sigma2 - theta0.sigma2;
    sum += diag * diag;
    for (std::size_t i = j + 1; i < n; ++i) {
      const double r = design.distance(i, j);
      const double diff = kernel(theta, r) - kernel(theta0, r);
      sum += 2.0 * diff * diff;
    }
  }
  return sum / static_cast<double>(n);
}

/// (1/n) sum_{i,j} (sum_m lambda_m dk_theta0(s_i - s_j)/dtheta_m)^2 for a unit direction lambda.
inline double ident_local(const KernelSpec& spec, const ParamVector& theta0, const ParamGradient& lambda,
                          const Design& design) {
  theta0.validate();
  const double norm = std::hypot(lambda[0], lambda[1]);
  if (std::abs(norm - 1.0) > 1e-12) throw DomainError("ident_local: lambda must be a unit vector");
  const Kernel kernel(spec);
  const std::size_t n = design.size();
  auto directional = [&](double r) {
    const ParamGradient g = kernel.gradient(theta0, r);
    return lambda[0] * g[0] + lambda[1] * g[1];
  };
  double sum = 0.0;
  const double diag = directional(0.0);
  sum += static_cast<double>(n) * diag * diag;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = j + 1; i < n; ++i) {
      const double v = directional(design.distance(i, j));
      sum += 2.0 * v * v;
    }
  }
  return sum / static_cast<double>(n);
}

}  // namespace gpmle
