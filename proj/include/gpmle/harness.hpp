#pragma once

// Replicated Monte Carlo experiments for the asymptotic behaviour of the ML estimator.
//
// Seeds: the design for sample size n uses SeedSpec{master_seed ^ kDesignSalt, n}.
// Fixed-domain uniform designs and 1-d increasing-domain designs are drawn once at
// max(n_list) and truncated, so they are nested. Replicate r at sample size n uses
// SeedSpec{master_seed, (n << 32) | r}.
// Replicates are independent tasks written into pre-assigned slots, so a report
// does not depend on the worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "gpmle/covariance.hpp"
#include "gpmle/design.hpp"
#include "gpmle/error.hpp"
#include "gpmle/gausslin.hpp"
#include "gpmle/mle.hpp"
#include "gpmle/simulate.hpp"
#include "gpmle/stats.hpp"

namespace gpmle {

inline constexpr std::uint64_t kDesignSalt = 0x64657369676E5F5FULL;

struct ExperimentConfig {
  std::string experiment;  // harness operation name, may be empty
  Regime regime = Regime::IncreasingDomain;
  KernelSpec kernel = KernelSpec::exponential();
  ParamVector theta0{1.0, 0.5};
  ParamVector theta_alt{2.0, 1.0};  // fixed theta != theta0 for variance/identifiability trends
  std::vector<std::size_t> n_list;
  std::size_t replicates = 1;
  ParamBounds bounds;
  double alpha1 = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t master_seed = 0;
  int dimension = 1;
  double delta = 1.0;
  double perturb = 0.2;
  Box box = Box::unit(1);
  FixedMode design_mode = FixedMode::Uniform;
  std::size_t multistart = 3;
  std::size_t workers = 1;
  CholPolicy chol_policy = CholPolicy::Jitter;

  void validate() const {
    kernel.validate();
    theta0.validate();
    theta_alt.validate();
    bounds.validate();
    if (n_list.empty()) throw ConfigError("n_list", "must be non-empty");
    for (std::size_t i = 0; i < n_list.size(); ++i) {
      if (n_list[i] < 2) throw ConfigError("n_list", "sample sizes must be >= 2");
      if (i > 0 && n_list[i] <= n_list[i - 1]) throw ConfigError("n_list", "must be strictly increasing");
    }
    if (replicates < 1) throw ConfigError("replicates", "must be >= 1");
    if (dimension < 1 || dimension > 3) throw ConfigError("dimension", "must be 1, 2 or 3");
    if (!(delta > 0.0)) throw ConfigError("delta", "must be > 0");
    if (!(perturb >= 0.0 && perturb <= 0.4)) throw ConfigError("perturb", "must lie in [0, 0.4]");
    try {
      box.validate(dimension);
    } catch (const std::exception& e) {
      throw ConfigError("box", e.what());
    }
    if (multistart < 1) throw ConfigError("multistart", "must be >= 1");
    if (workers < 1) throw ConfigError("workers", "must be >= 1");
    if (!std::isnan(alpha1) && !(alpha1 >= bounds.alpha_inf && alpha1 <= bounds.alpha_sup)) {
      throw ConfigError("alpha1", "must lie in [alpha_inf, alpha_sup]");
    }
  }
};

/// One (n, replicate) outcome; columns of the records CSV.
struct ReplicateRecord {
  Regime regime = Regime::IncreasingDomain;
  KernelSpec kernel;
  std::size_t n = 0;
  std::size_t replicate = 0;
  double sigma2_hat = std::numeric_limits<double>::quiet_NaN();
  double alpha_hat = std::numeric_limits<double>::quiet_NaN();
  double microergodic_hat = std::numeric_limits<double>::quiet_NaN();
  double z1 = std::numeric_limits<double>::quiet_NaN();
  double z2 = std::numeric_limits<double>::quiet_NaN();
  double jitter_used = 0.0;
  std::string status = "ok";

  [[nodiscard]] bool ok() const { return status == "ok"; }
};

/// Summary statistics for one sample size.
struct SizeSummary {
  std::size_t n = 0;
  std::size_t ok = 0;
  std::size_t failed = 0;
  std::map<std::string, double> metrics;
};

/// One point of an (x = n, y) series for external plotting.
struct TrendPoint {
  std::string series;
  std::size_t n = 0;
  double value = 0.0;
};

struct McReport {
  std::string experiment;
  ExperimentConfig config;
  std::vector<ReplicateRecord> records;
  std::vector<SizeSummary> per_n;
  std::vector<TrendPoint> trends;
  std::map<std::string, double> overall;

  /// Metric lookup; throws if absent.
  [[nodiscard]] double metric(std::size_t n, const std::string& key) const {
    for (const auto& s : per_n) {
      if (s.n == n) return s.metrics.at(key);
    }
    throw DomainError("no summary for n = " + std::to_string(n));
  }

  [[nodiscard]] std::vector<double> series(const std::string& name) const {
    std::vector<double> out;
    for (const auto& t : trends) {
      if (t.series == name) out.push_back(t.value);
    }
    return out;
  }
};

namespace detail {

/// Runs task(i) for i in [0, count) on up to `workers` threads.
template <typename Task>
void parallel_for(std::size_t count, std::size_t workers, Task&& task) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) task(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline SeedSpec replicate_seed(const ExperimentConfig& cfg, std::size_t n, std::size_t r) {
  return {cfg.master_seed, (static_cast<std::uint64_t>(n) << 32) | static_cast<std::uint64_t>(r)};
}

inline SeedSpec design_seed(const ExperimentConfig& cfg, std::size_t n) {
  return {cfg.master_seed ^ kDesignSalt, static_cast<std::uint64_t>(n)};
}

/// In d = 1 increasing-domain designs are prefixes of the draw at max(n_list), hence nested.
inline Design increasing_design(const ExperimentConfig& cfg, std::size_t n) {
  if (cfg.dimension == 1) {
    const std::size_t n_max = std::max(n, cfg.n_list.empty() ? n : cfg.n_list.back());
    return gen_increasing(n_max, 1, cfg.delta, cfg.perturb, design_seed(cfg, n_max)).head(n);
  }
  return gen_increasing(n, cfg.dimension, cfg.delta, cfg.perturb, design_seed(cfg, n));
}

/// Nested fixed-domain designs: prefixes of one draw at max(n_list).
inline Design fixed_design(const ExperimentConfig& cfg, std::size_t n) {
  const std::size_t n_max = cfg.n_list.back();
  if (cfg.design_mode == FixedMode::Grid) return gen_fixed(n, cfg.dimension, cfg.box, FixedMode::Grid, design_seed(cfg, n));
  return gen_fixed(n_max, cfg.dimension, cfg.box, FixedMode::Uniform, design_seed(cfg, n_max)).head(n);
}

inline Design design_for(const ExperimentConfig& cfg, Regime regime, std::size_t n) {
  return regime == Regime::IncreasingDomain ? increasing_design(cfg, n) : fixed_design(cfg, n);
}

inline std::vector<double> column(const std::vector<ReplicateRecord>& recs, double ReplicateRecord::*field) {
  std::vector<double> out;
  for (const auto& r : recs) {
    if (r.ok()) out.push_back(r.*field);
  }
  return out;
}

inline void put_sample(std::map<std::string, double>& m, const std::string& prefix, const std::vector<double>& xs) {
  if (xs.empty()) return;
  const auto s = stats::summarize(xs);
  m[prefix + "_mean"] = s.mean;
  m[prefix + "_var"] = s.variance;
}

inline std::string failure_status(const std::exception& e) {
  if (dynamic_cast<const NotPositiveDefinite*>(&e)) return "factorization_failed";
  if (dynamic_cast<const FitError*>(&e)) return "fit_failed";
  return "error";
}

}  // namespace detail

inline constexpr double kNormalQuantile975 = 1.959963984540054;

/// Sigma_theta0 on the experiment design at sample size n.
inline FisherMatrix experiment_fisher(const ExperimentConfig& cfg, std::size_t n) {
  return fisher_matrix(cfg.kernel, cfg.theta0, detail::increasing_design(cfg, n), cfg.chol_policy);
}

namespace detail {

inline void summarize_normality(McReport& report) {
  const ExperimentConfig& cfg = report.config;
  for (const std::size_t n : cfg.n_list) {
    std::vector<ReplicateRecord> recs;
    for (const auto& r : report.records) {
      if (r.n == n) recs.push_back(r);
    }
    const FisherMatrix fisher = experiment_fisher(cfg, n);
    const Eigen::Matrix2d inv = fisher.sigma.inverse();
    const double nn = static_cast<double>(n);
    const double hw1 = kNormalQuantile975 * std::sqrt(inv(0, 0) / nn);
    const double hw2 = kNormalQuantile975 * std::sqrt(inv(1, 1) / nn);

    SizeSummary s;
    s.n = n;
    std::vector<bool> cover1;
    std::vector<bool> cover2;
    std::vector<double> err_norm;
    for (const auto& rec : recs) {
      if (!rec.ok()) {
        ++s.failed;
        continue;
      }
      ++s.ok;
      const double d1 = rec.sigma2_hat - cfg.theta0.sigma2;
      const double d2 = rec.alpha_hat - cfg.theta0.alpha;
      cover1.push_back(std::abs(d1) <= hw1);
      cover2.push_back(std::abs(d2) <= hw2);
      err_norm.push_back(std::hypot(d1, d2));
    }
    s.metrics["fisher_11"] = fisher.sigma(0, 0);
    s.metrics["fisher_12"] = fisher.sigma(0, 1);
    s.metrics["fisher_22"] = fisher.sigma(1, 1);
    s.metrics["fisher_lambda_min"] = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(fisher.sigma).eigenvalues()(0);
    s.metrics["ci_half_width_sigma2"] = hw1;
    s.metrics["ci_half_width_alpha"] = hw2;
    s.metrics["failed"] = static_cast<double>(s.failed);
    if (s.ok > 0) {
      const auto z1 = column(recs, &ReplicateRecord::z1);
      const auto z2 = column(recs, &ReplicateRecord::z2);
      s.metrics["ks_z1"] = stats::ks_distance_normal(z1);
      s.metrics["ks_z2"] = stats::ks_distance_normal(z2);
      put_sample(s.metrics, "z1", z1);
      put_sample(s.metrics, "z2", z2);
      put_sample(s.metrics, "sigma2_hat", column(recs, &ReplicateRecord::sigma2_hat));
      put_sample(s.metrics, "alpha_hat", column(recs, &ReplicateRecord::alpha_hat));
      const auto c1 = stats::coverage(cover1);
      const auto c2 = stats::coverage(cover2);
      s.metrics["coverage_sigma2"] = c1.rate;
      s.metrics["coverage_sigma2_se"] = c1.std_error;
      s.metrics["coverage_alpha"] = c2.rate;
      s.metrics["coverage_alpha_se"] = c2.std_error;
      s.metrics["median_error_norm"] = stats::median(err_norm);
      report.trends.push_back({"median_error_norm", n, s.metrics["median_error_norm"]});
    }
    report.per_n.push_back(std::move(s));
  }
}

inline void summarize_microergodic(McReport& report) {
  const ExperimentConfig& cfg = report.config;
  const double m0 = microergodic(cfg.theta0, cfg.kernel.effective_nu());
  report.overall["microergodic_true"] = m0;
  report.overall["limit_variance"] = 2.0 * m0 * m0;
  for (const std::size_t n : cfg.n_list) {
    SizeSummary s;
    s.n = n;
    const double root_n = std::sqrt(static_cast<double>(n));
    std::vector<double> za;
    std::vector<double> zb;
    for (const auto& rec : report.records) {
      if (rec.n != n) continue;
      if (!rec.ok()) {
        ++s.failed;
        continue;
      }
      ++s.ok;
      za.push_back(rec.z1);
      zb.push_back(rec.z2);
    }
    s.metrics["failed"] = static_cast<double>(s.failed);
    if (s.ok > 0) {
      for (const auto& [name, z] : {std::pair{"pathA", &za}, std::pair{"pathB", &zb}}) {
        const auto st = stats::summarize(*z);
        double ms = 0.0;
        for (double v : *z) ms += v * v;
        ms /= static_cast<double>(z->size());
        const std::string p(name);
        s.metrics[p + "_mean"] = m0 + st.mean / root_n;
        s.metrics[p + "_bias"] = st.mean / root_n;
        s.metrics[p + "_rmse"] = std::sqrt(ms) / root_n;
        s.metrics[p + "_scaled_var"] = st.variance;
      }
      const double va = stats::summarize(za).variance / static_cast<double>(n);
      const double vb = stats::summarize(zb).variance / static_cast<double>(n);
      s.metrics["mean_diff"] = s.metrics["pathA_mean"] - s.metrics["pathB_mean"];
      s.metrics["pooled_se"] = std::sqrt(va / static_cast<double>(za.size()) + vb / static_cast<double>(zb.size()));
      report.trends.push_back({"pathA_rmse", n, s.metrics["pathA_rmse"]});
      report.trends.push_back({"pathB_rmse", n, s.metrics["pathB_rmse"]});
    }
    report.per_n.push_back(std::move(s));
  }
}

}  // namespace detail

/// Recomputes the per-n summaries of a replicate-based experiment from its config and records.
inline McReport summarize(const std::string& experiment, const ExperimentConfig& cfg,
                          std::vector<ReplicateRecord> records) {
  if (records.empty()) throw DomainError("summarize: no records");
  std::stable_sort(records.begin(), records.end(), [](const ReplicateRecord& a, const ReplicateRecord& b) {
    return a.n != b.n ? a.n < b.n : a.replicate < b.replicate;
  });
  McReport report{experiment, cfg, std::move(records), {}, {}, {}};
  if (experiment == "increasing_normality") {
    detail::summarize_normality(report);
  } else if (experiment == "fixed_microergodic") {
    detail::summarize_microergodic(report);
  } else {
    throw DomainError("summarize: experiment '" + experiment + "' has no replicate records");
  }
  return report;
}

/// Asymptotic normality in the increasing-domain regime.
///
/// For each n: z = sqrt(n) Sigma^{1/2} (theta_hat - theta0) with Sigma = fisher_matrix at
/// the true theta0 and the symmetric square root. Per-component 95% intervals are
/// theta_hat_i +- 1.96 sqrt((Sigma^{-1})_ii / n).
inline McReport run_increasing_normality(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.regime != Regime::IncreasingDomain) throw ConfigError("regime", "increasing_normality needs regime 'increasing'");
  std::vector<ReplicateRecord> all;
  for (const std::size_t n : cfg.n_list) {
    const Design design = detail::increasing_design(cfg, n);
    const FisherMatrix fisher = fisher_matrix(cfg.kernel, cfg.theta0, design, cfg.chol_policy);
    const Eigen::Matrix2d root = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(fisher.sigma).operatorSqrt();
    const CholFactor truth = chol(build_cov(cfg.kernel, cfg.theta0, design), cfg.chol_policy);
    const double root_n = std::sqrt(static_cast<double>(n));

    std::vector<ReplicateRecord> recs(cfg.replicates);
    detail::parallel_for(cfg.replicates, cfg.workers, [&](std::size_t r) {
      ReplicateRecord rec{cfg.regime, cfg.kernel, n, r};
      rec.jitter_used = truth.jitter_used();
      try {
        const Vector y = sample_gp(truth, detail::replicate_seed(cfg, n, r));
        const FitResult fit = fit_full(cfg.kernel, design, y, cfg.bounds, cfg.multistart, cfg.chol_policy);
        rec.sigma2_hat = fit.theta_hat.sigma2;
        rec.alpha_hat = fit.theta_hat.alpha;
        rec.microergodic_hat = fit.microergodic_hat;
        const Eigen::Vector2d dev(fit.theta_hat.sigma2 - cfg.theta0.sigma2, fit.theta_hat.alpha - cfg.theta0.alpha);
        const Eigen::Vector2d z = root_n * (root * dev);
        rec.z1 = z(0);
        rec.z2 = z(1);
        rec.jitter_used = std::max(fit.jitter_used, truth.jitter_used());
      } catch (const std::exception& e) {
        rec.status = detail::failure_status(e);
      }
      recs[r] = std::move(rec);
    });
    all.insert(all.end(), recs.begin(), recs.end());
  }
  return summarize("increasing_normality", cfg, std::move(all));
}

/// Fixed-domain estimation of the microergodic parameter sigma2 alpha^(2 nu).
///
/// Path A: sigma2_hat(alpha1) alpha1^(2 nu) with alpha1 fixed.
/// Path B: sigma2_ML alpha_ML^(2 nu) from fit_full.
/// Records carry z1 = sqrt(n)(A - m0) and z2 = sqrt(n)(B - m0), m0 the true value.
inline McReport run_fixed_microergodic(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.regime != Regime::FixedDomain) throw ConfigError("regime", "fixed_microergodic needs regime 'fixed'");
  if (cfg.kernel.family == Family::SquaredExponential) throw ConfigError("kernel", "needs a Matern or exponential kernel");
  if (std::isnan(cfg.alpha1)) throw ConfigError("alpha1", "required for fixed_microergodic");
  const double nu = cfg.kernel.effective_nu();
  const double m0 = microergodic(cfg.theta0, nu);
  const double scale1 = std::pow(cfg.alpha1, 2.0 * nu);

  std::vector<ReplicateRecord> all;
  for (const std::size_t n : cfg.n_list) {
    const Design design = detail::fixed_design(cfg, n);
    const Kernel kernel(cfg.kernel);
    const Matrix dist = pairwise_distances(design);
    const CholFactor truth = chol(build_cov(kernel, cfg.theta0, dist), cfg.chol_policy);
    const CholFactor unit1 = chol(build_cov(kernel, ParamVector{1.0, cfg.alpha1}, dist), cfg.chol_policy);
    const double root_n = std::sqrt(static_cast<double>(n));

    std::vector<ReplicateRecord> recs(cfg.replicates);
    detail::parallel_for(cfg.replicates, cfg.workers, [&](std::size_t r) {
      ReplicateRecord rec{cfg.regime, cfg.kernel, n, r};
      rec.jitter_used = std::max(truth.jitter_used(), unit1.jitter_used());
      try {
        const Vector y = sample_gp(truth, detail::replicate_seed(cfg, n, r));
        const double path_a = profile_sigma2_from_factor(unit1, y) * scale1;
        const FitResult fit = fit_full(cfg.kernel, design, y, cfg.bounds, cfg.multistart, cfg.chol_policy);
        rec.sigma2_hat = fit.theta_hat.sigma2;
        rec.alpha_hat = fit.theta_hat.alpha;
        rec.microergodic_hat = fit.microergodic_hat;
        rec.z1 = root_n * (path_a - m0);
        rec.z2 = root_n * (fit.microergodic_hat - m0);
        rec.jitter_used = std::max(rec.jitter_used, fit.jitter_used);
      } catch (const std::exception& e) {
        rec.status = detail::failure_status(e);
      }
      recs[r] = std::move(rec);
    });
    all.insert(all.end(), recs.begin(), recs.end());
  }
  return summarize("fixed_microergodic", cfg, std::move(all));
}

/// Extreme eigenvalues of R_theta0 on nested designs, for both regimes.
inline McReport run_eigen_trends(const ExperimentConfig& cfg) {
  cfg.validate();
  McReport report{"eigen_trends", cfg, {}, {}, {}, {}};
  for (const std::size_t n : cfg.n_list) {
    SizeSummary s;
    s.n = n;
    for (const Regime regime : {Regime::IncreasingDomain, Regime::FixedDomain}) {
      const Design design = detail::design_for(cfg, regime, n);
      const CovMatrix cov = build_cov(cfg.kernel, cfg.theta0, design);
      const EigenExtremes ex = eig_extremes(cov);
      const std::string p(to_string(regime));
      s.metrics[p + "_lambda_min"] = ex.lambda_min;
      s.metrics[p + "_lambda_max"] = ex.lambda_max;
      s.metrics[p + "_gershgorin"] = gershgorin_upper(cov);
      s.metrics[p + "_min_separation"] = min_separation(design);
      report.trends.push_back({p + "_lambda_min", n, ex.lambda_min});
      report.trends.push_back({p + "_lambda_max", n, ex.lambda_max});
    }
    s.ok = 1;
    report.per_n.push_back(std::move(s));
  }
  return report;
}

/// Exact var(L_n(theta_alt)) under theta0 on increasing-domain designs, with successive ratios.
inline McReport run_varLn_decay(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.regime != Regime::IncreasingDomain) throw ConfigError("regime", "varLn_decay needs regime 'increasing'");
  McReport report{"varLn_decay", cfg, {}, {}, {}, {}};
  std::map<std::size_t, double> by_n;
  for (const std::size_t n : cfg.n_list) {
    const Design design = detail::increasing_design(cfg, n);
    SizeSummary s;
    s.n = n;
    s.ok = 1;
    const double v = var_Ln(cfg.kernel, cfg.theta_alt, cfg.theta0, design, cfg.chol_policy);
    s.metrics["var_Ln"] = v;
    s.metrics["var_Ln_theta0"] = var_Ln(cfg.kernel, cfg.theta0, cfg.theta0, design, cfg.chol_policy);
    s.metrics["two_over_n"] = 2.0 / static_cast<double>(n);
    by_n[n] = v;
    report.trends.push_back({"var_Ln", n, v});
    report.per_n.push_back(std::move(s));
  }
  for (auto& s : report.per_n) {
    if (const auto it = by_n.find(2 * s.n); it != by_n.end()) {
      s.metrics["ratio_to_double_n"] = by_n[s.n] / it->second;
      report.trends.push_back({"var_ratio", s.n, s.metrics["ratio_to_double_n"]});
    }
  }
  return report;
}

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"increasing_normality", "fixed_microergodic", "eigen_trends",
                                              "varLn_decay"};
  return names;
}

/// Dispatch by operation name.
inline McReport run_experiment(const std::string& name, const ExperimentConfig& cfg) {
  if (name == "increasing_normality") return run_increasing_normality(cfg);
  if (name == "fixed_microergodic") return run_fixed_microergodic(cfg);
  if (name == "eigen_trends") return run_eigen_trends(cfg);
  if (name == "varLn_decay") return run_varLn_decay(cfg);
  throw ConfigError("experiment", "unknown experiment '" + name + "'");
}

}  // namespace gpmle
