#pragma once

// Sampling designs for both asymptotic regimes and exact Gaussian-process draws.
//
// Seeding contract
// ----------------
// A replicate stream is seeded with
//     stream_seed = splitmix64(splitmix64(master_seed) XOR replicate_index)
// where splitmix64 is the finaliser of Steele, Lea & Flood (2014). The engine is
// std::mt19937_64, whose output sequence is fixed by the C++ standard. Uniforms
// are (u64 >> 11) * 2^-53 in [0, 1); normals come from the Marsaglia polar
// method (pairs, second value cached). None of the <random> distributions are
// used, so streams are identical across standard-library implementations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpmle/design.hpp"
#include "gpmle/error.hpp"
#include "gpmle/gausslin.hpp"
#include "gpmle/io.hpp"

namespace gpmle {

struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t replicate_index = 0;
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t stream_seed(const SeedSpec& s) {
  return splitmix64(splitmix64(s.master_seed) ^ s.replicate_index);
}

/// Deterministic uniform/normal source for one replicate.
class RandomStream {
 public:
  explicit RandomStream(const SeedSpec& seed) : engine_(stream_seed(seed)) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (cached_) {
      const double v = *cached_;
      cached_.reset();
      return v;
    }
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * f;
    return u * f;
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> cached_;
};

namespace detail {

/// Smallest m with m^d >= n.
inline std::size_t grid_side(std::size_t n, int d) {
  std::size_t m = 1;
  auto pow_d = [d](std::size_t b) {
    std::size_t p = 1;
    for (int k = 0; k < d; ++k) p *= b;
    return p;
  };
  while (pow_d(m) < n) ++m;
  return m;
}

/// Multi-index of the i-th grid node, last coordinate varying fastest.
inline std::vector<std::size_t> grid_index(std::size_t i, std::size_t side, int d) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(d));
  for (int k = d - 1; k >= 0; --k) {
    idx[static_cast<std::size_t>(k)] = i % side;
    i /= side;
  }
  return idx;
}

inline void check_dim(int d) {
  if (d < 1 || d > 3) throw DomainError("dimension d must be 1, 2 or 3");
}

}  // namespace detail

/// Perturbed regular grid with minimum separation >= delta.
///
/// Grid spacing is delta / (1 - 2 perturb); every coordinate is shifted by
/// Uniform(-perturb * spacing, perturb * spacing). Nodes are visited with the
/// last coordinate fastest, so in d = 1 smaller designs are prefixes of larger ones.
inline Design gen_increasing(std::size_t n, int d, double delta, double perturb, const SeedSpec& seed) {
  detail::check_dim(d);
  if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("delta must be > 0");
  if (!(perturb >= 0.0 && perturb <= 0.4)) throw DomainError("perturb must lie in [0, 0.4]");
  const double spacing = delta / (1.0 - 2.0 * perturb);
  const std::size_t side = detail::grid_side(n, d);
  RandomStream rng(seed);
  Design design;
  design.regime = Regime::IncreasingDomain;
  design.delta = delta;
  design.points.resize(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = detail::grid_index(i, side, d);
    for (int k = 0; k < d; ++k) {
      const double base = spacing * static_cast<double>(idx[static_cast<std::size_t>(k)]);
      const double shift = perturb == 0.0 ? 0.0 : (2.0 * rng.uniform() - 1.0) * perturb * spacing;
      design.points(static_cast<Eigen::Index>(i), k) = base + shift;
    }
  }
  return design;
}

enum class FixedMode { Uniform, Grid };

/// n points in a compact box: i.i.d. uniform, or a regular grid including the faces.
inline Design gen_fixed(std::size_t n, int d, const Box& box, FixedMode mode, const SeedSpec& seed) {
  detail::check_dim(d);
  box.validate(d);
  Design design;
  design.regime = Regime::FixedDomain;
  design.box = box;
  design.points.resize(static_cast<Eigen::Index>(n), d);
  if (mode == FixedMode::Uniform) {
    RandomStream rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < d; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        design.points(static_cast<Eigen::Index>(i), k) = box.lower[kk] + rng.uniform() * (box.upper[kk] - box.lower[kk]);
      }
    }
    return design;
  }
  const std::size_t side = detail::grid_side(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = detail::grid_index(i, side, d);
    for (int k = 0; k < d; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const double frac = side == 1 ? 0.5 : static_cast<double>(idx[kk]) / static_cast<double>(side - 1);
      design.points(static_cast<Eigen::Index>(i), k) = box.lower[kk] + frac * (box.upper[kk] - box.lower[kk]);
    }
  }
  return design;
}

/// Minimum pairwise distance (sweep along the first coordinate).
inline double min_separation(const Design& design) {
  const std::size_t n = design.size();
  if (n < 2) throw DomainError("min_separation needs at least two points");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& pts = design.points;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pts(static_cast<Eigen::Index>(a), 0) < pts(static_cast<Eigen::Index>(b), 0);
  });
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < n; ++a) {
    const double xa = pts(static_cast<Eigen::Index>(order[a]), 0);
    for (std::size_t b = a + 1; b < n; ++b) {
      if (pts(static_cast<Eigen::Index>(order[b]), 0) - xa > best) break;
      best = std::min(best, design.distance(order[a], order[b]));
    }
  }
  return best;
}

/// y = L z with z i.i.d. N(0, 1) from the seeded stream.
inline Vector sample_gp(const CholFactor& factor, const SeedSpec& seed) {
  RandomStream rng(seed);
  Vector z(static_cast<Eigen::Index>(factor.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return factor.lower().triangularView<Eigen::Lower>() * z;
}

/// CSV with header "x1[,x2[,x3]]", one point per row.
inline void write_design_csv(std::ostream& out, const Design& design) {
  for (int k = 0; k < design.dim(); ++k) out << (k ? "," : "") << 'x' << (k + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < design.points.rows(); ++i) {
    for (int k = 0; k < design.dim(); ++k) out << (k ? "," : "") << io::format_double(design.points(i, k));
    out << '\n';
  }
}

inline Design read_design_csv(std::istream& in, Regime regime = Regime::FixedDomain) {
  std::vector<std::string> header;
  const auto rows = io::read_numeric_csv(in, header);
  const int d = static_cast<int>(header.size());
  detail::check_dim(d);
  for (int k = 0; k < d; ++k) {
    if (header[static_cast<std::size_t>(k)] != "x" + std::to_string(k + 1)) {
      throw DomainError("design CSV header must be x1[,x2[,x3]]");
    }
  }
  Design design;
  design.regime = regime;
  design.points.resize(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int k = 0; k < d; ++k) design.points(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<std::size_t>(k)];
  }
  return design;
}

/// CSV with header "y", one observation per row.
inline void write_vector_csv(std::ostream& out, const Vector& y, const std::string& name = "y") {
  out << name << '\n';
  for (Eigen::Index i = 0; i < y.size(); ++i) out << io::format_double(y(i)) << '\n';
}

inline Vector read_vector_csv(std::istream& in) {
  std::vector<std::string> header;
  const auto rows = io::read_numeric_csv(in, header);
  if (header.size() != 1) throw DimensionMismatch("observation CSV must have exactly one column");
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) y(static_cast<Eigen::Index>(i)) = rows[i][0];
  return y;
}

}  // namespace gpmle
