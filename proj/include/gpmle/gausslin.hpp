#pragma once

// Dense symmetric linear algebra for Gaussian likelihoods.
//
// Factorisation is Cholesky only; no likelihood path forms an explicit inverse.
// Storage and the blocked LLT kernel come from Eigen.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "gpmle/covariance.hpp"
#include "gpmle/design.hpp"
#include "gpmle/error.hpp"

namespace gpmle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// R_theta = [k_theta(s_i - s_j)], exactly symmetric.
struct CovMatrix {
  Matrix entries;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(entries.rows()); }
};

/// Covariance matrix from precomputed pairwise distances.
inline CovMatrix build_cov(const Kernel& kernel, const ParamVector& theta, const Matrix& dist) {
  const Eigen::Index n = dist.rows();
  CovMatrix cov{Matrix(n, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    cov.entries(j, j) = theta.sigma2;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = kernel(theta, dist(i, j));
      cov.entries(i, j) = v;
      cov.entries(j, i) = v;
    }
  }
  return cov;
}

inline CovMatrix build_cov(const KernelSpec& spec, const ParamVector& theta, const Design& design) {
  theta.validate();
  return build_cov(Kernel(spec), theta, pairwise_distances(design));
}

/// dR/dsigma2 and dR/dalpha, entrywise from Kernel::gradient.
inline std::array<Matrix, kNumParams> build_cov_gradients(const Kernel& kernel, const ParamVector& theta,
                                                          const Matrix& dist) {
  const Eigen::Index n = dist.rows();
  std::array<Matrix, kNumParams> d{Matrix(n, n), Matrix(n, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const ParamGradient g = kernel.gradient(theta, dist(i, j));
      for (std::size_t m = 0; m < kNumParams; ++m) {
        d[m](i, j) = g[m];
        d[m](j, i) = g[m];
      }
    }
  }
  return d;
}

enum class CholPolicy { Strict, Jitter };

/// Jitter ladder, relative to mean(diag): first and last rung, escalating by 10x.
inline constexpr double kJitterStart = 1e-10;
inline constexpr double kJitterMax = 1e-6;

/// Lower Cholesky factor of a (possibly jittered) covariance matrix.
class CholFactor {
 public:
  CholFactor(Matrix lower, double jitter_used) : lower_(std::move(lower)), jitter_used_(jitter_used) {
    logdet_ = 2.0 * lower_.diagonal().array().log().sum();
  }

  [[nodiscard]] const Matrix& lower() const { return lower_; }
  [[nodiscard]] double logdet() const { return logdet_; }
  [[nodiscard]] double jitter_used() const { return jitter_used_; }
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(lower_.rows()); }

  /// L^{-1} b
  [[nodiscard]] Vector whiten(const Vector& b) const {
    return lower_.triangularView<Eigen::Lower>().solve(b);
  }

 private:
  Matrix lower_;
  double logdet_ = 0.0;
  double jitter_used_ = 0.0;
};

namespace detail {

/// Column at which an unblocked Cholesky meets a non-positive pivot, or n if none.
inline std::size_t failing_pivot(const Matrix& a) {
  const Eigen::Index n = a.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double diag = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(diag > 0.0)) return static_cast<std::size_t>(j);
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
    }
  }
  return static_cast<std::size_t>(n);
}

inline bool try_llt(const Matrix& a, Matrix& lower) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  return (lower.diagonal().array() > 0.0).all();
}

}  // namespace detail

/// Cholesky factorisation. Jitter policy walks the jitter ladder before failing.
inline CholFactor chol(const CovMatrix& cov, CholPolicy policy = CholPolicy::Strict) {
  const Matrix& a = cov.entries;
  if (a.rows() != a.cols()) throw DimensionMismatch("chol: matrix is not square");
  Matrix lower;
  if (detail::try_llt(a, lower)) return CholFactor(std::move(lower), 0.0);
  if (policy == CholPolicy::Strict) throw NotPositiveDefinite(detail::failing_pivot(a), "strict policy");

  const double mean_diag = a.diagonal().mean();
  for (double rel = kJitterStart; rel <= kJitterMax * (1.0 + 1e-9); rel *= 10.0) {
    const double jitter = rel * mean_diag;
    Matrix shifted = a;
    shifted.diagonal().array() += jitter;
    if (detail::try_llt(shifted, lower)) return CholFactor(std::move(lower), jitter);
  }
  Matrix shifted = a;
  shifted.diagonal().array() += kJitterMax * mean_diag;
  throw NotPositiveDefinite(detail::failing_pivot(shifted), "jitter ladder exhausted");
}

/// y^T R^{-1} y by one triangular solve.
inline double quad_form_inv(const CholFactor& factor, const Vector& y) {
  if (static_cast<std::size_t>(y.size()) != factor.size()) throw DimensionMismatch("quad_form_inv: length(y) != n");
  return factor.whiten(y).squaredNorm();
}

/// R^{-1} B for a vector or matrix right-hand side.
template <typename Derived>
typename Derived::PlainObject solve(const CholFactor& factor, const Eigen::MatrixBase<Derived>& b) {
  if (static_cast<std::size_t>(b.rows()) != factor.size()) throw DimensionMismatch("solve: rows(B) != n");
  const auto l = factor.lower().triangularView<Eigen::Lower>();
  typename Derived::PlainObject x = l.solve(b);
  l.transpose().solveInPlace(x);
  return x;
}

/// tr(A B) without forming the product.
inline double trace_of_product(const Matrix& a, const Matrix& b) {
  return a.cwiseProduct(b.transpose()).sum();
}

/// E(V^T A V) = tr(A Sigma) for centred V with covariance Sigma.
inline double qf_mean(const Matrix& a, const Matrix& sigma) {
  if (a.rows() != a.cols() || sigma.rows() != sigma.cols() || a.rows() != sigma.rows()) {
    throw DimensionMismatch("qf_mean: A and Sigma must be square of equal size");
  }
  return trace_of_product(a, sigma);
}

/// cov(V^T A V, V^T B V) = 2 tr(A Sigma B Sigma), with A and B symmetrised first.
inline double qf_cov(const Matrix& a, const Matrix& b, const Matrix& sigma) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || sigma.rows() != sigma.cols() || a.rows() != b.rows() ||
      a.rows() != sigma.rows()) {
    throw DimensionMismatch("qf_cov: A, B and Sigma must be square of equal size");
  }
  const Matrix as = 0.5 * (a + a.transpose());
  const Matrix bs = 0.5 * (b + b.transpose());
  return 2.0 * trace_of_product(as * sigma, bs * sigma);
}

struct EigenExtremes {
  double lambda_min;
  double lambda_max;
};

/// Smallest and largest eigenvalue (Householder tridiagonalisation + implicit QR).
inline EigenExtremes eig_extremes(const CovMatrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov.entries, Eigen::EigenvaluesOnly);
  const Vector& ev = solver.eigenvalues();  // ascending
  return {ev(0), ev(ev.size() - 1)};
}

/// max_i sum_j |R_ij|, an upper bound on lambda_max.
inline double gershgorin_upper(const CovMatrix& cov) {
  return cov.entries.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace gpmle
