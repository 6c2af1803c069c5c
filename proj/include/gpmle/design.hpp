#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gpmle/error.hpp"

namespace gpmle {

enum class Regime { IncreasingDomain, FixedDomain };

inline std::string_view to_string(Regime r) {
  return r == Regime::IncreasingDomain ? "increasing" : "fixed";
}

inline Regime regime_from_string(std::string_view s) {
  if (s == "increasing" || s == "increasing_domain") return Regime::IncreasingDomain;
  if (s == "fixed" || s == "fixed_domain") return Regime::FixedDomain;
  throw DomainError("unknown regime '" + std::string(s) + "'");
}

/// Axis-aligned compact box [lower, upper] in R^d.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  static Box unit(int d) {
    return {std::vector<double>(static_cast<std::size_t>(d), 0.0), std::vector<double>(static_cast<std::size_t>(d), 1.0)};
  }

  [[nodiscard]] int dim() const { return static_cast<int>(lower.size()); }

  void validate(int d) const {
    if (dim() != d || upper.size() != lower.size()) throw DimensionMismatch("box dimension does not match d");
    for (std::size_t k = 0; k < lower.size(); ++k) {
      if (!(lower[k] < upper[k])) throw DomainError("box requires lower < upper in every coordinate");
    }
  }

  [[nodiscard]] bool contains(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    if (x.size() != dim()) throw DimensionMismatch("point dimension does not match the box");
    for (std::size_t k = 0; k < lower.size(); ++k) {
      const double v = x(static_cast<Eigen::Index>(k));
      if (v < lower[k] || v > upper[k]) return false;
    }
    return true;
  }
};

/// An ordered set of n observation sites in R^d, one per row of `points`.
struct Design {
  Eigen::MatrixXd points;  // n x d
  Regime regime = Regime::FixedDomain;
  double delta = 0.0;  // separation target (increasing domain)
  Box box;             // enclosing domain (fixed domain)

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  [[nodiscard]] int dim() const { return static_cast<int>(points.cols()); }

  [[nodiscard]] double distance(std::size_t i, std::size_t j) const {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(j);
    return (points.row(ii) - points.row(jj)).norm();
  }

  /// First m points, keeping regime metadata.
  [[nodiscard]] Design head(std::size_t m) const {
    if (m > size()) throw DimensionMismatch("head: requested more points than the design holds");
    Design out = *this;
    out.points = points.topRows(static_cast<Eigen::Index>(m));
    return out;
  }
};

/// Symmetric n x n matrix of pairwise Euclidean distances.
inline Eigen::MatrixXd pairwise_distances(const Design& design) {
  const auto n = static_cast<Eigen::Index>(design.size());
  Eigen::MatrixXd dist(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    dist(j, j) = 0.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double r = (design.points.row(i) - design.points.row(j)).norm();
      if (r == 0.0) throw DuplicatePointError(static_cast<std::size_t>(j), static_cast<std::size_t>(i));
      dist(i, j) = r;
      dist(j, i) = r;
    }
  }
  return dist;
}

}  // namespace gpmle
