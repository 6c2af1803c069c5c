#pragma once

// Strict JSON experiment configuration.
//
// Every key is validated; unknown keys are errors. Overrides of the form
// "key=value" (dotted keys reach into objects, e.g. "theta0.alpha=0.7") are
// applied to the parsed document before validation; the value is read as JSON
// when it parses and as a string otherwise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpmle/covariance.hpp"
#include "gpmle/error.hpp"
#include "gpmle/harness.hpp"

namespace gpmle {

using Json = nlohmann::json;

inline const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys{
      "experiment", "regime",    "kernel",    "theta0",      "theta_alt",  "n_list",     "replicates",
      "bounds",     "alpha1",    "master_seed", "dimension", "delta",      "perturb",    "box",
      "design_mode", "multistart", "workers",  "chol_policy"};
  return keys;
}

/// Keys a full experiment config must provide.
inline const std::vector<std::string>& required_experiment_keys() {
  static const std::vector<std::string> keys{"regime", "kernel", "theta0", "n_list", "replicates", "master_seed"};
  return keys;
}

namespace detail {

template <typename T>
T get_as(const Json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(key, std::string("wrong type: ") + e.what());
  }
}

inline void check_keys(const Json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where, "expected an object");
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) throw ConfigError(where.empty() ? k : where + "." + k, "unknown key");
  }
}

inline ParamVector parse_theta(const Json& j, const std::string& key) {
  check_keys(j, key, {"sigma2", "alpha"});
  if (!j.contains("sigma2") || !j.contains("alpha")) throw ConfigError(key, "needs sigma2 and alpha");
  ParamVector t{get_as<double>(j.at("sigma2"), key + ".sigma2"), get_as<double>(j.at("alpha"), key + ".alpha")};
  if (!(t.sigma2 > 0.0) || !std::isfinite(t.sigma2)) throw ConfigError(key + ".sigma2", "expected a finite value > 0");
  if (!(t.alpha > 0.0) || !std::isfinite(t.alpha)) throw ConfigError(key + ".alpha", "expected a finite value > 0");
  return t;
}

inline KernelSpec parse_kernel(const Json& j) {
  check_keys(j, "kernel", {"family", "nu"});
  if (!j.contains("family")) throw ConfigError("kernel.family", "required");
  const auto name = get_as<std::string>(j.at("family"), "kernel.family");
  KernelSpec spec;
  try {
    spec.family = family_from_string(name);
  } catch (const DomainError&) {
    throw ConfigError("kernel.family", "expected one of exponential, gaussian, matern");
  }
  if (spec.family == Family::Matern) {
    if (!j.contains("nu")) throw ConfigError("kernel.nu", "required for the matern family");
    spec.nu = get_as<double>(j.at("nu"), "kernel.nu");
    if (!(spec.nu > 0.0) || !std::isfinite(spec.nu)) throw ConfigError("kernel.nu", "expected a finite value > 0");
  } else if (j.contains("nu")) {
    throw ConfigError("kernel.nu", "only allowed for the matern family");
  }
  return spec;
}

inline std::pair<double, double> parse_range(const Json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(key, "expected [lower, upper]");
  return {get_as<double>(j[0], key), get_as<double>(j[1], key)};
}

inline void set_dotted(Json& doc, const std::string& key, const Json& value) {
  Json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError(key, "malformed override key");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part)) (*node)[part] = Json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
}

}  // namespace detail

/// Applies "key=value" overrides in order.
inline void apply_overrides(Json& doc, const std::vector<std::string>& overrides) {
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(ov, "override must look like key=value");
    const std::string key = ov.substr(0, eq);
    const std::string raw = ov.substr(eq + 1);
    Json value = Json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    detail::set_dotted(doc, key, value);
  }
}

/// Validated config from a JSON document; `required` keys must be present.
inline ExperimentConfig config_from_json(const Json& doc, const std::vector<std::string>& required = required_experiment_keys()) {
  detail::check_keys(doc, "", config_keys());
  for (const auto& k : required) {
    if (!doc.contains(k)) throw ConfigError(k, "required key is missing");
  }
  ExperimentConfig cfg;
  if (doc.contains("experiment")) cfg.experiment = detail::get_as<std::string>(doc.at("experiment"), "experiment");
  if (doc.contains("regime")) {
    const auto r = detail::get_as<std::string>(doc.at("regime"), "regime");
    try {
      cfg.regime = regime_from_string(r);
    } catch (const DomainError&) {
      throw ConfigError("regime", "expected 'increasing' or 'fixed'");
    }
  }
  if (doc.contains("kernel")) cfg.kernel = detail::parse_kernel(doc.at("kernel"));
  if (doc.contains("theta0")) cfg.theta0 = detail::parse_theta(doc.at("theta0"), "theta0");
  cfg.theta_alt = doc.contains("theta_alt") ? detail::parse_theta(doc.at("theta_alt"), "theta_alt")
                                            : ParamVector{2.0 * cfg.theta0.sigma2, 2.0 * cfg.theta0.alpha};
  if (doc.contains("n_list")) {
    const Json& nl = doc.at("n_list");
    if (!nl.is_array()) throw ConfigError("n_list", "expected an array of sample sizes");
    for (const auto& v : nl) {
      if (!v.is_number_integer() || v.get<long long>() < 2) throw ConfigError("n_list", "entries must be integers >= 2");
      cfg.n_list.push_back(v.get<std::size_t>());
    }
  }
  auto positive_count = [&](const char* key, std::size_t& dst) {
    if (!doc.contains(key)) return;
    const Json& v = doc.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 1) throw ConfigError(key, "expected an integer >= 1");
    dst = v.get<std::size_t>();
  };
  positive_count("replicates", cfg.replicates);
  positive_count("multistart", cfg.multistart);
  positive_count("workers", cfg.workers);
  if (doc.contains("master_seed")) {
    const Json& v = doc.at("master_seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ConfigError("master_seed", "expected a non-negative 64-bit integer");
    }
    cfg.master_seed = v.get<std::uint64_t>();
  }
  if (doc.contains("bounds")) {
    const Json& b = doc.at("bounds");
    detail::check_keys(b, "bounds", {"alpha", "sigma2"});
    if (b.contains("alpha")) std::tie(cfg.bounds.alpha_inf, cfg.bounds.alpha_sup) = detail::parse_range(b.at("alpha"), "bounds.alpha");
    if (b.contains("sigma2")) std::tie(cfg.bounds.sigma2_lo, cfg.bounds.sigma2_hi) = detail::parse_range(b.at("sigma2"), "bounds.sigma2");
  }
  if (!(cfg.bounds.alpha_inf > 0.0 && cfg.bounds.alpha_inf < cfg.bounds.alpha_sup && std::isfinite(cfg.bounds.alpha_sup))) {
    throw ConfigError("bounds.alpha", "ParamBounds requires 0 < alpha_inf < alpha_sup < inf");
  }
  if (!(cfg.bounds.sigma2_lo > 0.0 && cfg.bounds.sigma2_lo < cfg.bounds.sigma2_hi && std::isfinite(cfg.bounds.sigma2_hi))) {
    throw ConfigError("bounds.sigma2", "requires 0 < lower < upper < inf");
  }
  if (doc.contains("alpha1")) cfg.alpha1 = detail::get_as<double>(doc.at("alpha1"), "alpha1");
  if (doc.contains("dimension")) {
    const Json& v = doc.at("dimension");
    if (!v.is_number_integer()) throw ConfigError("dimension", "expected 1, 2 or 3");
    cfg.dimension = v.get<int>();
  }
  if (doc.contains("delta")) cfg.delta = detail::get_as<double>(doc.at("delta"), "delta");
  if (doc.contains("perturb")) cfg.perturb = detail::get_as<double>(doc.at("perturb"), "perturb");
  cfg.box = Box::unit(std::clamp(cfg.dimension, 1, 3));
  if (doc.contains("box")) {
    const Json& b = doc.at("box");
    detail::check_keys(b, "box", {"lower", "upper"});
    if (!b.contains("lower") || !b.contains("upper")) throw ConfigError("box", "needs lower and upper");
    cfg.box.lower = detail::get_as<std::vector<double>>(b.at("lower"), "box.lower");
    cfg.box.upper = detail::get_as<std::vector<double>>(b.at("upper"), "box.upper");
  }
  if (doc.contains("design_mode")) {
    const auto m = detail::get_as<std::string>(doc.at("design_mode"), "design_mode");
    if (m == "uniform") {
      cfg.design_mode = FixedMode::Uniform;
    } else if (m == "grid") {
      cfg.design_mode = FixedMode::Grid;
    } else {
      throw ConfigError("design_mode", "expected 'uniform' or 'grid'");
    }
  }
  if (doc.contains("chol_policy")) {
    const auto p = detail::get_as<std::string>(doc.at("chol_policy"), "chol_policy");
    if (p == "jitter") {
      cfg.chol_policy = CholPolicy::Jitter;
    } else if (p == "strict") {
      cfg.chol_policy = CholPolicy::Strict;
    } else {
      throw ConfigError("chol_policy", "expected 'jitter' or 'strict'");
    }
  }
  if (!required.empty()) {
    try {
      cfg.validate();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("config", e.what());
    }
  }
  return cfg;
}

/// Reads a JSON file, applies overrides and validates.
inline ExperimentConfig parse_config(const std::string& path, const std::vector<std::string>& overrides = {},
                                     const std::vector<std::string>& required = required_experiment_keys()) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  Json doc = Json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config", "'" + path + "' is not valid JSON");
  apply_overrides(doc, overrides);
  return config_from_json(doc, required);
}

/// Full config including every default, for provenance.
inline Json to_json(const ExperimentConfig& cfg) {
  Json j;
  j["experiment"] = cfg.experiment;
  j["regime"] = std::string(to_string(cfg.regime));
  j["kernel"] = {{"family", std::string(to_string(cfg.kernel.family))}};
  if (cfg.kernel.family == Family::Matern) j["kernel"]["nu"] = cfg.kernel.nu;
  j["theta0"] = {{"sigma2", cfg.theta0.sigma2}, {"alpha", cfg.theta0.alpha}};
  j["theta_alt"] = {{"sigma2", cfg.theta_alt.sigma2}, {"alpha", cfg.theta_alt.alpha}};
  j["n_list"] = cfg.n_list;
  j["replicates"] = cfg.replicates;
  j["bounds"] = {{"alpha", {cfg.bounds.alpha_inf, cfg.bounds.alpha_sup}},
                 {"sigma2", {cfg.bounds.sigma2_lo, cfg.bounds.sigma2_hi}}};
  if (!std::isnan(cfg.alpha1)) j["alpha1"] = cfg.alpha1;
  j["master_seed"] = cfg.master_seed;
  j["dimension"] = cfg.dimension;
  j["delta"] = cfg.delta;
  j["perturb"] = cfg.perturb;
  j["box"] = {{"lower", cfg.box.lower}, {"upper", cfg.box.upper}};
  j["design_mode"] = cfg.design_mode == FixedMode::Uniform ? "uniform" : "grid";
  j["multistart"] = cfg.multistart;
  j["workers"] = cfg.workers;
  j["chol_policy"] = cfg.chol_policy == CholPolicy::Jitter ? "jitter" : "strict";
  return j;
}

}  // namespace gpmle
