#pragma once

// Serialisation of fits and Monte Carlo reports: records CSV, summary JSON and
// (series, n, value) trend CSV. Floats are written in shortest round-trip form.

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpmle/config.hpp"
#include "gpmle/harness.hpp"
#include "gpmle/io.hpp"
#include "gpmle/mle.hpp"

namespace gpmle {

inline constexpr const char* kRecordsHeader =
    "regime,kernel,nu,n,replicate,sigma2_hat,alpha_hat,microergodic_hat,z1,z2,jitter_used,status";

inline void write_records_csv(std::ostream& out, const std::vector<ReplicateRecord>& records) {
  out << kRecordsHeader << '\n';
  for (const auto& r : records) {
    out << to_string(r.regime) << ',' << to_string(r.kernel.family) << ',' << io::format_double(r.kernel.effective_nu())
        << ',' << r.n << ',' << r.replicate << ',' << io::format_double(r.sigma2_hat) << ','
        << io::format_double(r.alpha_hat) << ',' << io::format_double(r.microergodic_hat) << ','
        << io::format_double(r.z1) << ',' << io::format_double(r.z2) << ',' << io::format_double(r.jitter_used) << ','
        << r.status << '\n';
  }
}

inline std::vector<ReplicateRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRecordsHeader) throw DomainError("records CSV: unexpected header");
  std::vector<ReplicateRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = io::split_csv_line(line);
    if (c.size() != 12) throw DimensionMismatch("records CSV: expected 12 columns");
    ReplicateRecord r;
    r.regime = regime_from_string(c[0]);
    r.kernel.family = family_from_string(c[1]);
    r.kernel.nu = r.kernel.family == Family::Matern ? io::parse_double(c[2]) : 0.0;
    r.n = std::stoul(c[3]);
    r.replicate = std::stoul(c[4]);
    r.sigma2_hat = io::parse_double(c[5]);
    r.alpha_hat = io::parse_double(c[6]);
    r.microergodic_hat = io::parse_double(c[7]);
    r.z1 = io::parse_double(c[8]);
    r.z2 = io::parse_double(c[9]);
    r.jitter_used = io::parse_double(c[10]);
    r.status = c[11];
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_trends_csv(std::ostream& out, const std::vector<TrendPoint>& trends) {
  out << "series,n,value\n";
  for (const auto& t : trends) out << t.series << ',' << t.n << ',' << io::format_double(t.value) << '\n';
}

inline Json summary_json(const McReport& report) {
  Json j;
  j["experiment"] = report.experiment;
  j["config"] = to_json(report.config);
  j["record_count"] = report.records.size();
  Json per_n = Json::array();
  for (const auto& s : report.per_n) {
    Json m = Json::object();
    for (const auto& [k, v] : s.metrics) m[k] = v;
    per_n.push_back({{"n", s.n}, {"ok", s.ok}, {"failed", s.failed}, {"metrics", m}});
  }
  j["per_n"] = per_n;
  Json overall = Json::object();
  for (const auto& [k, v] : report.overall) overall[k] = v;
  j["overall"] = overall;
  return j;
}

/// Flat FitResult record.
inline Json fit_result_json(const FitResult& fit) {
  return {{"sigma2_hat", fit.theta_hat.sigma2},
          {"alpha_hat", fit.theta_hat.alpha},
          {"criterion", fit.criterion},
          {"microergodic_hat", fit.microergodic_hat},
          {"n_evals", fit.n_evals},
          {"at_alpha_inf", fit.at_alpha_inf},
          {"at_alpha_sup", fit.at_alpha_sup},
          {"sigma2_clamped", fit.sigma2_clamped},
          {"jitter_used", fit.jitter_used}};
}

}  // namespace gpmle
