#pragma once

// `gpmle` command-line front end.
//
// Exit status: 0 success, 1 usage or validation error, 2 runtime failure.
// Every invocation that gets as far as an output directory leaves a
// manifest.json there (config echo, input content hashes, timings, status).

#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gpmle/config.hpp"
#include "gpmle/error.hpp"
#include "gpmle/harness.hpp"
#include "gpmle/mle.hpp"
#include "gpmle/report.hpp"
#include "gpmle/selftest.hpp"
#include "gpmle/simulate.hpp"

namespace gpmle::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr const char* kWorkersEnv = "GPMLE_WORKERS";
inline constexpr const char* kManifestName = "manifest.json";

/// Hex SHA-1 of the git blob object for `content` ("blob <size>\0<content>").
inline std::string git_blob_sha1(const std::string& content) {
  const std::string head = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw std::runtime_error("EVP_MD_CTX_new failed");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, head.data(), head.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("SHA-1 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, "cannot open input file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Invocation {
  std::string subcommand;
  std::string config_path;
  std::string out_dir = "gpmle-out";
  std::optional<std::size_t> workers;
  std::vector<std::string> overrides;
  bool force = false;
  std::string experiment;  // positional name for `experiment`
  std::string design_path;
  std::string y_path;
};

/// State shared between the subcommand body and the manifest writer.
class Session {
 public:
  explicit Session(const Invocation& inv) : inv_(inv), start_(std::chrono::steady_clock::now()) {}

  /// Records an input file and returns its content.
  std::string input(const std::string& role, const std::string& path) {
    std::string content = read_file(path);
    inputs_.push_back({{"role", role}, {"path", path}, {"bytes", content.size()}, {"git_blob_sha1", git_blob_sha1(content)}});
    return content;
  }

  ExperimentConfig load_config(const std::vector<std::string>& required) {
    Json doc = Json::object();
    if (!inv_.config_path.empty()) {
      doc = Json::parse(input("config", inv_.config_path), nullptr, false);
      if (doc.is_discarded()) throw ConfigError("config", "'" + inv_.config_path + "' is not valid JSON");
    } else if (!required.empty()) {
      throw ConfigError("--config", "a config file is required for '" + inv_.subcommand + "'");
    }
    apply_overrides(doc, inv_.overrides);
    ExperimentConfig cfg = config_from_json(doc, required);
    if (inv_.workers) cfg.workers = *inv_.workers;
    if (cfg.workers < 1) throw ConfigError("workers", "expected an integer >= 1");
    config_ = to_json(cfg);
    return cfg;
  }

  /// Refuses to clobber existing outputs unless --force; creates out_dir.
  void claim(const std::vector<std::string>& names) {
    std::vector<std::string> all = names;
    all.emplace_back(kManifestName);
    if (!inv_.force) {
      for (const auto& name : all) {
        if (fs::exists(fs::path(inv_.out_dir) / name)) {
          throw ConfigError("--out", "'" + (fs::path(inv_.out_dir) / name).string() + "' exists; pass --force to overwrite");
        }
      }
    }
    fs::create_directories(inv_.out_dir);
    claimed_ = true;
  }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const fs::path path = fs::path(inv_.out_dir) / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    body(out);
    out.flush();
    if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
    outputs_.push_back(name);
  }

  void time(const std::string& phase, double seconds) { timings_[phase] = seconds; }

  void write_manifest(int status, const std::string& error, const std::vector<std::string>& argv) {
    if (!claimed_) return;
    Json m;
    m["tool"] = "gpmle";
    m["subcommand"] = inv_.subcommand;
    m["argv"] = argv;
    m["config"] = config_;
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    timings_["total_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m["timings"] = timings_;
    m["exit_status"] = status;
    if (!error.empty()) m["error"] = error;
    std::ofstream out(fs::path(inv_.out_dir) / kManifestName, std::ios::binary | std::ios::trunc);
    out << m.dump(2) << '\n';
  }

  [[nodiscard]] const Invocation& invocation() const { return inv_; }

 private:
  const Invocation& inv_;
  std::chrono::steady_clock::time_point start_;
  Json inputs_ = Json::array();
  Json config_ = nullptr;
  std::vector<std::string> outputs_;
  Json timings_ = Json::object();
  bool claimed_ = false;
};

template <typename F>
auto timed(Session& s, const std::string& phase, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  auto result = f();
  s.time(phase, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return result;
}

inline void write_report(Session& s, const McReport& report) {
  s.write("summary.json", [&](std::ostream& o) { o << summary_json(report).dump(2) << '\n'; });
  s.write("trends.csv", [&](std::ostream& o) { write_trends_csv(o, report.trends); });
  if (!report.records.empty()) s.write("records.csv", [&](std::ostream& o) { write_records_csv(o, report.records); });
}

inline std::vector<std::string> report_files(bool with_records) {
  std::vector<std::string> f{"summary.json", "trends.csv"};
  if (with_records) f.emplace_back("records.csv");
  return f;
}

/// Design and one sample path (replicate 0) for every n in n_list.
inline int cmd_simulate(Session& s, std::ostream& out) {
  const ExperimentConfig cfg = s.load_config({"regime", "kernel", "theta0", "n_list", "master_seed"});
  std::vector<std::string> names;
  for (const std::size_t n : cfg.n_list) {
    names.push_back("design_n" + std::to_string(n) + ".csv");
    names.push_back("y_n" + std::to_string(n) + ".csv");
  }
  s.claim(names);
  const auto t0 = std::chrono::steady_clock::now();
  for (const std::size_t n : cfg.n_list) {
    const Design design = detail::design_for(cfg, cfg.regime, n);
    const CholFactor factor = chol(build_cov(cfg.kernel, cfg.theta0, design), cfg.chol_policy);
    const Vector y = sample_gp(factor, detail::replicate_seed(cfg, n, 0));
    s.write("design_n" + std::to_string(n) + ".csv", [&](std::ostream& o) { write_design_csv(o, design); });
    s.write("y_n" + std::to_string(n) + ".csv", [&](std::ostream& o) { write_vector_csv(o, y); });
    out << "n=" << n << ": wrote design and sample\n";
  }
  s.time("simulate_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return kExitOk;
}

inline int cmd_fit(Session& s, std::ostream& out) {
  const Invocation& inv = s.invocation();
  const ExperimentConfig cfg = s.load_config({});
  std::istringstream design_in(s.input("design", inv.design_path));
  std::istringstream y_in(s.input("y", inv.y_path));
  const Design design = read_design_csv(design_in);
  const Vector y = read_vector_csv(y_in);
  s.claim({"fit.json"});
  const FitResult fit =
      timed(s, "fit_seconds", [&] { return fit_full(cfg.kernel, design, y, cfg.bounds, cfg.multistart, cfg.chol_policy); });
  Json j = fit_result_json(fit);
  j["kernel"] = to_json(cfg)["kernel"];
  j["n"] = design.size();
  s.write("fit.json", [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  out << "sigma2_hat=" << io::format_double(fit.theta_hat.sigma2) << " alpha_hat=" << io::format_double(fit.theta_hat.alpha)
      << " criterion=" << io::format_double(fit.criterion) << '\n';
  return kExitOk;
}

inline int cmd_experiment(Session& s, std::ostream& out) {
  const Invocation& inv = s.invocation();
  ExperimentConfig cfg = s.load_config(required_experiment_keys());
  std::string name = inv.experiment.empty() ? cfg.experiment : inv.experiment;
  if (name.empty()) throw ConfigError("experiment", "give an experiment name or set 'experiment' in the config");
  if (!inv.experiment.empty() && !cfg.experiment.empty() && cfg.experiment != inv.experiment) {
    throw ConfigError("experiment", "positional name '" + inv.experiment + "' contradicts config value '" + cfg.experiment + "'");
  }
  const auto& known = experiment_names();
  if (std::find(known.begin(), known.end(), name) == known.end()) {
    throw ConfigError("experiment", "unknown experiment '" + name + "'");
  }
  cfg.experiment = name;
  const bool with_records = name == "increasing_normality" || name == "fixed_microergodic";
  s.claim(report_files(with_records));
  const McReport report = timed(s, "experiment_seconds", [&] { return run_experiment(name, cfg); });
  write_report(s, report);
  out << name << ": " << report.records.size() << " records, " << report.per_n.size() << " sample sizes\n";
  return kExitOk;
}

inline int cmd_eigens(Session& s, std::ostream& out) {
  ExperimentConfig cfg = s.load_config({"kernel", "theta0", "n_list"});
  cfg.experiment = "eigen_trends";
  s.claim(report_files(false));
  const McReport report = timed(s, "eigens_seconds", [&] { return run_eigen_trends(cfg); });
  write_report(s, report);
  for (const auto& p : report.per_n) {
    out << "n=" << p.n << " increasing lambda_min=" << io::format_double(p.metrics.at("increasing_lambda_min"))
        << " fixed lambda_min=" << io::format_double(p.metrics.at("fixed_lambda_min")) << '\n';
  }
  return kExitOk;
}

inline int cmd_selftest(Session& s, std::ostream& out) {
  s.claim({"selftest.json"});
  const auto checks = timed(s, "selftest_seconds", [] { return run_selftest(); });
  Json arr = Json::array();
  bool all = true;
  for (const auto& c : checks) {
    all = all && c.passed();
    arr.push_back({{"name", c.name}, {"observed", c.observed}, {"tolerance", c.tolerance}, {"passed", c.passed()}});
    out << (c.passed() ? "PASS " : "FAIL ") << c.name << " observed=" << io::format_double(c.observed)
        << " tol=" << io::format_double(c.tolerance) << '\n';
  }
  s.write("selftest.json", [&](std::ostream& o) { o << arr.dump(2) << '\n'; });
  return all ? kExitOk : kExitRuntime;
}

inline void add_common(CLI::App* sub, Invocation& inv, bool needs_config) {
  auto* cfg = sub->add_option("--config,-c", inv.config_path, "JSON config file")->check(CLI::ExistingFile);
  if (needs_config) cfg->required();
  sub->add_option("--out,-o", inv.out_dir, "Output directory (created if absent)")->capture_default_str();
  sub->add_option("--workers,-j", inv.workers,
                  std::string("Replicate worker threads; overrides the config. Default from $") + kWorkersEnv +
                      ", then the config, then 1")
      ->envname(kWorkersEnv)
      ->check(CLI::PositiveNumber);
  sub->add_option("--set", inv.overrides, "Config override key=value (dotted keys allowed); repeatable")->take_all();
  sub->add_flag("--force,-f", inv.force, "Overwrite existing output files");
}

inline std::unique_ptr<CLI::App> build_app(Invocation& inv) {
  auto owned = std::make_unique<CLI::App>("Maximum likelihood for Gaussian process covariance parameters: fits and asymptotic experiments.",
                                          "gpmle");
  CLI::App& app = *owned;
  app.require_subcommand(1);
  app.footer(std::string("Environment: ") + kWorkersEnv +
             " sets the default worker count (--workers takes precedence). No other variables are read.\n"
             "Exit status: 0 success, 1 usage or validation error, 2 runtime failure.");

  auto* sim = app.add_subcommand("simulate", "Write design and one Gaussian sample per n in n_list");
  add_common(sim, inv, true);
  auto* fit = app.add_subcommand("fit", "Maximum likelihood fit of a design CSV and observation CSV");
  add_common(fit, inv, false);
  fit->add_option("--design", inv.design_path, "Design CSV (header x1[,x2[,x3]])")->required()->check(CLI::ExistingFile);
  fit->add_option("--y", inv.y_path, "Observation CSV (header y)")->required()->check(CLI::ExistingFile);
  auto* exp = app.add_subcommand("experiment", "Run a Monte Carlo or deterministic experiment by name");
  add_common(exp, inv, true);
  exp->add_option("name", inv.experiment, "increasing_normality | fixed_microergodic | eigen_trends | varLn_decay");
  auto* eig = app.add_subcommand("eigens", "Extreme eigenvalues of R in both asymptotic regimes");
  add_common(eig, inv, true);
  auto* self = app.add_subcommand("selftest", "Deterministic exact-identity checks");
  add_common(self, inv, false);
  for (auto* sub : {sim, fit, exp, eig, self}) {
    sub->callback([&inv, sub] { inv.subcommand = sub->get_name(); });
  }
  return owned;
}

inline int classify(const std::exception& e) {
  if (dynamic_cast<const std::invalid_argument*>(&e) || dynamic_cast<const std::domain_error*>(&e)) return kExitInvalid;
  return kExitRuntime;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Invocation inv;
  const auto owned = build_app(inv);
  CLI::App& app = *owned;
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitInvalid;
  }

  std::vector<std::string> args(argv, argv + argc);
  Session session(inv);
  int status = kExitOk;
  std::string message;
  try {
    if (inv.subcommand == "simulate") status = cmd_simulate(session, out);
    else if (inv.subcommand == "fit") status = cmd_fit(session, out);
    else if (inv.subcommand == "experiment") status = cmd_experiment(session, out);
    else if (inv.subcommand == "eigens") status = cmd_eigens(session, out);
    else status = cmd_selftest(session, out);
  } catch (const std::exception& e) {
    status = classify(e);
    message = e.what();
    err << "error: " << message << '\n';
  }
  try {
    session.write_manifest(status, message, args);
  } catch (const std::exception& e) {
    err << "error: cannot write manifest: " << e.what() << '\n';
    if (status == kExitOk) status = kExitRuntime;
  }
  return status;
}

}  // namespace gpmle::cli
