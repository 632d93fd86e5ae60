#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"

#include "confsel/asymptotics.hpp"
#include "confsel/csv.hpp"
#include "confsel/error.hpp"
#include "confsel/pipeline.hpp"
#include "confsel/sim.hpp"
#include "confsel/version.hpp"

// JSON and CSV encodings of the engine's reports.

namespace confsel::io {

using Json = nlohmann::ordered_json;

inline SelectionMethod parse_method(std::string_view s) {
  if (s == "rand") return SelectionMethod::randomized;
  if (s == "dtm") return SelectionMethod::deterministic;
  if (s == "sub") return SelectionMethod::same_class;
  throw ContractError("method must be one of rand, dtm, sub");
}

inline ScoreRule parse_score(std::string_view s, double clip_constant) {
  if (s == "res") return ScoreRule::residual();
  if (s == "clip") return ScoreRule::clipped(clip_constant);
  if (s == "clip-threshold") return ScoreRule::clipped_threshold(clip_constant);
  throw ContractError("score must be one of res, clip, clip-threshold");
}

inline Json metrics_json(const ErrorMetrics& m) {
  return Json{{"fdp", m.fdp},
              {"power", m.power},
              {"n_selected", m.n_selected},
              {"n_false", m.n_false},
              {"n_true_selected", m.n_true_selected},
              {"n_true", m.n_true}};
}

/// Report document: {meta, k_star, tau_hat, selected, units, [metrics]}.
/// `config` is embedded verbatim under meta.config; `ids` (optional) gives a
/// label per test unit.
inline Json selection_json(const SelectionReport& r, const Json& config = Json::object(),
                           const std::vector<std::string>* ids = nullptr) {
  Json meta;
  meta["version"] = std::string(kVersion);
  meta["method"] = std::string(to_string(r.method));
  meta["score"] = r.score;
  meta["clip_M"] = r.clip_constant;
  meta["q"] = r.result.q;
  meta["seed"] = r.seed ? Json(*r.seed) : Json(nullptr);
  meta["n"] = r.n_calibration;
  meta["n_reference"] = r.n_reference;
  meta["m"] = r.units.size();
  meta["ties"] = r.ties;
  meta["warnings"] = r.warnings;
  meta["config"] = config;

  Json doc;
  doc["meta"] = std::move(meta);
  doc["k_star"] = r.result.k_star;
  doc["tau_hat"] = r.result.tau_hat;
  doc["selected"] = r.result.selected;
  Json units = Json::array();
  for (std::size_t j = 0; j < r.units.size(); ++j) {
    Json u;
    u["id"] = j;
    if (ids) u["label"] = (*ids)[j];
    u["p"] = r.units[j].p;
    u["v_hat"] = r.units[j].v_hat;
    u["c"] = r.units[j].c;
    units.push_back(std::move(u));
  }
  doc["units"] = std::move(units);
  if (r.metrics) doc["metrics"] = metrics_json(*r.metrics);
  return doc;
}

/// Inverse of selection_json (labels and config are not part of the report).
inline SelectionReport selection_from_json(const Json& doc) {
  SelectionReport r;
  const Json& meta = doc.at("meta");
  r.method = parse_method(meta.at("method").get<std::string>());
  r.score = meta.at("score").get<std::string>();
  r.clip_constant = meta.at("clip_M").get<double>();
  r.result.q = meta.at("q").get<double>();
  if (!meta.at("seed").is_null()) r.seed = meta.at("seed").get<std::uint64_t>();
  r.n_calibration = meta.at("n").get<std::size_t>();
  r.n_reference = meta.at("n_reference").get<std::size_t>();
  r.ties = meta.at("ties").get<std::size_t>();
  r.warnings = meta.at("warnings").get<std::vector<std::string>>();
  r.result.k_star = doc.at("k_star").get<std::size_t>();
  r.result.tau_hat = doc.at("tau_hat").get<double>();
  r.result.selected = doc.at("selected").get<std::vector<std::size_t>>();
  for (const auto& u : doc.at("units")) {
    r.units.push_back({u.at("p").get<double>(), u.at("v_hat").get<double>(), u.at("c").get<double>()});
  }
  if (doc.contains("metrics")) {
    const Json& m = doc.at("metrics");
    ErrorMetrics e;
    e.fdp = m.at("fdp").get<double>();
    e.power = m.at("power").get<double>();
    e.n_selected = m.at("n_selected").get<std::size_t>();
    e.n_false = m.at("n_false").get<std::size_t>();
    e.n_true_selected = m.at("n_true_selected").get<std::size_t>();
    e.n_true = m.at("n_true").get<std::size_t>();
    r.metrics = e;
  }
  return r;
}

inline Json asymptotic_json(const AsymptoticReport& r, const Json& config = Json::object()) {
  Json doc;
  doc["meta"] = Json{{"version", std::string(kVersion)}, {"n_pop", r.n_pop}, {"config", config}};
  doc["t_star"] = r.t_star;
  doc["fdr_limit"] = r.fdr_limit;
  doc["power_limit"] = r.power_limit;
  doc["condition_flag"] = r.condition_flag;
  doc["v_star"] = std::isfinite(r.v_star) ? Json(r.v_star) : Json(nullptr);
  return doc;
}

inline constexpr std::string_view kMcCsvHeader =
    "setting,score,q,sigma,n,m,N,fdr_mean,fdr_se,power_mean,power_se,nsel_mean";

inline std::string mc_csv(const std::vector<sim::McRow>& rows) {
  std::ostringstream os;
  os << kMcCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.setting << ',' << r.score << ',' << format_real(r.q) << ',' << format_real(r.sigma) << ',' << r.n << ','
       << r.m << ',' << r.reps << ',' << format_real(r.fdr_mean) << ',' << format_real(r.fdr_se) << ','
       << format_real(r.power_mean) << ',' << format_real(r.power_se) << ',' << format_real(r.nsel_mean) << '\n';
  }
  return os.str();
}

/// Long format for plotting: one line per (configuration, metric).
inline std::string mc_plot_csv(const std::vector<sim::McRow>& rows) {
  std::ostringstream os;
  os << "setting,score,q,sigma,metric,value,se\n";
  for (const auto& r : rows) {
    const std::string key = r.setting + ',' + r.score + ',' + format_real(r.q) + ',' + format_real(r.sigma) + ',';
    os << key << "fdr," << format_real(r.fdr_mean) << ',' << format_real(r.fdr_se) << '\n';
    os << key << "power," << format_real(r.power_mean) << ',' << format_real(r.power_se) << '\n';
    os << key << "nsel," << format_real(r.nsel_mean) << ",\n";
  }
  return os.str();
}

inline Json mc_json(const std::vector<sim::McRow>& rows, const Json& config = Json::object()) {
  Json doc;
  doc["meta"] = Json{{"version", std::string(kVersion)}, {"config", config}};
  Json arr = Json::array();
  for (const auto& r : rows) {
    arr.push_back(Json{{"setting", r.setting},
                       {"score", r.score},
                       {"method", r.method},
                       {"q", r.q},
                       {"sigma", r.sigma},
                       {"n", r.n},
                       {"m", r.m},
                       {"N", r.reps},
                       {"fdr_mean", r.fdr_mean},
                       {"fdr_se", r.fdr_se},
                       {"power_mean", r.power_mean},
                       {"power_se", r.power_se},
                       {"nsel_mean", r.nsel_mean},
                       {"ties", r.ties}});
  }
  doc["rows"] = std::move(arr);
  return doc;
}

}  // namespace confsel::io
