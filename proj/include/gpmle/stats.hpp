#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "gpmle/error.hpp"

namespace gpmle::stats {

struct SampleSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased; 0 when count == 1
};

inline SampleSummary summarize(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("summarize: empty sample");
  SampleSummary s;
  s.count = xs.size();
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(s.count);
  if (s.count > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.variance = ss / static_cast<double>(s.count - 1);
  }
  return s;
}

inline double median(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("median: empty sample");
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// sup_t |F_hat(t) - Phi(t)| for the empirical CDF of xs.
inline double ks_distance_normal(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("ks_distance_normal: empty sample");
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = normal_cdf(v[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

struct Coverage {
  std::size_t hits = 0;
  std::size_t total = 0;
  double rate = 0.0;
  double std_error = 0.0;  // sqrt(rate (1 - rate) / total)
};

inline Coverage coverage(const std::vector<bool>& contained) {
  if (contained.empty()) throw DomainError("coverage: no intervals");
  Coverage c;
  c.total = contained.size();
  c.hits = static_cast<std::size_t>(std::count(contained.begin(), contained.end(), true));
  c.rate = static_cast<double>(c.hits) / static_cast<double>(c.total);
  c.std_error = std::sqrt(c.rate * (1.0 - c.rate) / static_cast<double>(c.total));
  return c;
}

}  // namespace gpmle::stats
