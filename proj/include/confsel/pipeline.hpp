#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "confsel/bh.hpp"
#include "confsel/error.hpp"
#include "confsel/pvalue.hpp"
#include "confsel/random.hpp"
#include "confsel/score.hpp"

namespace confsel {

/// One row of calibration or test data. Calibration rows need an outcome;
/// test rows carry one only in evaluation mode.
struct Unit {
  double prediction = 0.0;
  std::optional<double> outcome;
  std::optional<std::string> group;
  std::optional<double> threshold;  // per-sample threshold column
};

struct Dataset {
  std::vector<Unit> calibration;
  std::vector<Unit> test;
};

/// Training outcomes per group, for group-quantile thresholds.
using GroupedOutcomes = std::map<std::string, std::vector<double>>;

/// How the threshold c_j of each unit is produced.
struct ThresholdSpec {
  struct Constant {
    double tau = 0.0;
    // Declared provenance: set when tau was tuned on the calibration data,
    // which breaks the independence the guarantee relies on.
    bool derived_from_calibration = false;
  };
  struct PerSample {};
  struct GroupQuantile {
    double level = 0.5;
  };

  std::variant<Constant, PerSample, GroupQuantile> mode = Constant{};

  static ThresholdSpec constant(double tau, bool derived_from_calibration = false) {
    return {Constant{tau, derived_from_calibration}};
  }
  static ThresholdSpec per_sample() { return {PerSample{}}; }
  static ThresholdSpec group_quantile(double level) { return {GroupQuantile{level}}; }
};

/// Lower empirical quantile: the smallest value whose empirical CDF reaches
/// `level`.
inline double lower_quantile(std::vector<double> values, double level) {
  detail::require(!values.empty(), "quantile of an empty list");
  detail::require(level > 0.0 && level < 1.0, "quantile level must be in (0,1)");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  auto k = static_cast<std::size_t>(std::ceil(level * n));
  // guard against level * n landing a hair above an integer
  while (k > 1 && static_cast<double>(k - 1) / n >= level) --k;
  k = std::clamp<std::size_t>(k, 1, values.size());
  return values[k - 1];
}

/// One finite threshold per unit in `units`.
inline std::vector<double> build_thresholds(const ThresholdSpec& spec, std::span<const Unit> units,
                                            const GroupedOutcomes* training = nullptr) {
  std::vector<double> c;
  c.reserve(units.size());
  if (const auto* constant = std::get_if<ThresholdSpec::Constant>(&spec.mode)) {
    detail::finite(constant->tau, "threshold constant");
    c.assign(units.size(), constant->tau);
  } else if (std::holds_alternative<ThresholdSpec::PerSample>(spec.mode)) {
    for (std::size_t j = 0; j < units.size(); ++j) {
      if (!units[j].threshold) {
        throw IngestionError("threshold", "unit " + std::to_string(j) + " has no per-sample threshold");
      }
      c.push_back(detail::finite(*units[j].threshold, "threshold"));
    }
  } else {
    const auto& gq = std::get<ThresholdSpec::GroupQuantile>(spec.mode);
    detail::require(gq.level > 0.0 && gq.level < 1.0, "group quantile level must be in (0,1)");
    detail::require(training != nullptr, "group-quantile thresholds need training outcomes per group");
    std::map<std::string, double> cache;
    std::set<std::string> missing;
    for (std::size_t j = 0; j < units.size(); ++j) {
      if (!units[j].group) throw IngestionError("group", "unit " + std::to_string(j) + " has no group label");
      const std::string& g = *units[j].group;
      auto it = training->find(g);
      if (it == training->end() || it->second.empty()) {
        missing.insert(g);
        continue;
      }
      auto [pos, inserted] = cache.try_emplace(g, 0.0);
      if (inserted) {
        for (double y : it->second) detail::finite(y, "training outcome");
        pos->second = lower_quantile(it->second, gq.level);
      }
    }
    if (!missing.empty()) {
      std::ostringstream os;
      os << "groups without training outcomes:";
      for (const auto& g : missing) os << ' ' << g;
      throw IngestionError("group", os.str());
    }
    for (const auto& u : units) c.push_back(cache.at(*u.group));
  }
  return c;
}

enum class SelectionMethod { randomized, deterministic, same_class };

inline std::string_view to_string(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::randomized: return "rand";
    case SelectionMethod::deterministic: return "dtm";
    case SelectionMethod::same_class: return "sub";
  }
  return "unknown";
}

struct UnitReport {
  double p = 0.0;
  double v_hat = 0.0;
  double c = 0.0;

  bool operator==(const UnitReport&) const = default;
};

struct SelectionReport {
  SelectionResult result;
  std::vector<UnitReport> units;
  SelectionMethod method = SelectionMethod::randomized;
  std::string score;
  double clip_constant = 0.0;
  std::optional<std::uint64_t> seed;
  std::size_t n_calibration = 0;
  std::size_t n_reference = 0;  // calibration units the p-values rank against
  std::size_t ties = 0;
  std::vector<std::string> warnings;
  std::optional<ErrorMetrics> metrics;  // only when every test outcome is known

  bool operator==(const SelectionReport&) const = default;
};

/// Calibrate, score, compute conformal p-values and run BH.
///
/// randomized / deterministic: calibration scores are V(x_i, y_i; c_i) over
/// all calibration units. same_class: the calibration units with
/// y_i <= c_i are scored at V(x_i, c_i; c_i). Test units are always scored at
/// V(x_j, c_j; c_j). Calibration thresholds are only built when the score or
/// method needs them; the residual score of a calibration unit is
/// V(x_i, y_i) and needs no threshold.
inline SelectionReport select(const Dataset& data, const ScoreRule& rule, const ThresholdSpec& spec,
                              SelectionMethod method, double q, const TieBreaker& tie_breaker,
                              const GroupedOutcomes* training = nullptr) {
  detail::check_level(q);
  if (data.calibration.empty()) throw ContractError("calibration set is empty");

  SelectionReport report;
  report.method = method;
  report.score = rule.name();
  report.clip_constant = rule.is_clipped() ? rule.clip_constant() : 0.0;
  report.seed = method == SelectionMethod::deterministic ? std::nullopt : tie_breaker.seed();
  report.n_calibration = data.calibration.size();

  for (std::size_t i = 0; i < data.calibration.size(); ++i) {
    const auto& u = data.calibration[i];
    if (!u.outcome) throw IngestionError("outcome", "calibration unit " + std::to_string(i) + " has no outcome");
    detail::finite(*u.outcome, "outcome");
    detail::finite(u.prediction, "prediction");
  }
  for (const auto& u : data.test) detail::finite(u.prediction, "prediction");

  const std::vector<double> c_test = build_thresholds(spec, data.test, training);
  const bool need_calib_thresholds = method == SelectionMethod::same_class || rule.uses_threshold();
  std::vector<double> c_calib;
  if (need_calib_thresholds) {
    try {
      c_calib = build_thresholds(spec, data.calibration, training);
    } catch (const IngestionError& e) {
      throw IngestionError(e.field(), std::string("calibration thresholds: ") + e.what());
    }
  }

  std::vector<double> v_hat(data.test.size());
  for (std::size_t j = 0; j < data.test.size(); ++j) v_hat[j] = rule(data.test[j].prediction, c_test[j], c_test[j]);

  PValueVector pv;
  if (method == SelectionMethod::same_class) {
    std::vector<double> class0;
    for (std::size_t i = 0; i < data.calibration.size(); ++i) {
      const auto& u = data.calibration[i];
      if (*u.outcome <= c_calib[i]) class0.push_back(rule(u.prediction, c_calib[i], c_calib[i]));
    }
    pv = same_class_pvalues(class0, v_hat, tie_breaker);
    report.n_reference = class0.size();
  } else {
    std::vector<double> scores(data.calibration.size());
    for (std::size_t i = 0; i < data.calibration.size(); ++i) {
      const auto& u = data.calibration[i];
      scores[i] = rule(u.prediction, *u.outcome, need_calib_thresholds ? c_calib[i] : 0.0);
    }
    const CalibrationScores calib(std::move(scores));
    pv = method == SelectionMethod::deterministic ? deterministic_pvalues(calib, v_hat)
                                                   : randomized_pvalues(calib, v_hat, tie_breaker);
    report.n_reference = calib.size();
  }
  report.ties = method == SelectionMethod::deterministic ? pv.ties : 0;

  report.result = bh_select(pv.p, q);
  report.units.reserve(data.test.size());
  for (std::size_t j = 0; j < data.test.size(); ++j) report.units.push_back({pv.p[j], v_hat[j], c_test[j]});

  std::vector<double> predictions;
  predictions.reserve(data.calibration.size() + data.test.size());
  for (const auto& u : data.calibration) predictions.push_back(u.prediction);
  for (const auto& u : data.test) predictions.push_back(u.prediction);
  if (auto w = clip_constant_warning(rule, predictions)) report.warnings.push_back(*w);
  if (const auto* constant = std::get_if<ThresholdSpec::Constant>(&spec.mode);
      constant && constant->derived_from_calibration) {
    report.warnings.push_back(
        "threshold constant was derived from calibration data; FDR control assumes it is independent of them");
  }
  if (report.ties > 0) {
    report.warnings.push_back("deterministic p-values met " + std::to_string(report.ties) +
                              " tied calibration scores; FDR control is only claimed without ties");
  }

  const bool evaluable = std::all_of(data.test.begin(), data.test.end(), [](const Unit& u) { return u.outcome.has_value(); });
  if (evaluable && !data.test.empty()) {
    std::vector<bool> truth(data.test.size());
    for (std::size_t j = 0; j < data.test.size(); ++j) truth[j] = *data.test[j].outcome > c_test[j];
    report.metrics = metrics(report.result.selected, truth);
  }
  return report;
}

/// Seeded overload. randomized and same_class need a seed; deterministic
/// ignores it.
inline SelectionReport select(const Dataset& data, const ScoreRule& rule, const ThresholdSpec& spec,
                              SelectionMethod method, double q, std::optional<std::uint64_t> seed,
                              const GroupedOutcomes* training = nullptr) {
  if (method != SelectionMethod::deterministic && !seed) {
    throw ContractError(std::string("a seed is required for method ") + std::string(to_string(method)));
  }
  return select(data, rule, spec, method, q, TieBreaker::seeded(seed.value_or(0)), training);
}

}  // namespace confsel
