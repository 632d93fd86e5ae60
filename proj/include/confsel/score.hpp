#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "confsel/error.hpp"

namespace confsel {

inline constexpr double kDefaultClipConstant = 100.0;

namespace detail {

inline double finite(double value, const char* field) {
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os << "non-finite value for " << field << ": " << value;
    throw IngestionError(field, os.str());
  }
  return value;
}

}  // namespace detail

// Nonconformity scores V(x, y). The model enters only through its
// prediction mu_hat = mu(x); every built-in score is non-decreasing in y.

/// V = y - mu_hat.
inline double residual_score(double mu_hat, double y) {
  return detail::finite(y, "y") - detail::finite(mu_hat, "mu_hat");
}

/// V = M * 1{y > c} - mu_hat. With c = 0 and y binary this is M*y - mu_hat.
/// Once M >= 2 sup|mu_hat| every unit with y > c scores above every unit
/// with y <= c.
inline double clipped_score(double mu_hat, double y, double c, double M) {
  detail::finite(mu_hat, "mu_hat");
  detail::finite(y, "y");
  detail::finite(c, "c");
  detail::finite(M, "M");
  return (y > c ? M : 0.0) - mu_hat;
}

/// V = M * 1{y >= c} + c * 1{y < c}, taken verbatim from the drug-target
/// screening setup. It ignores the prediction entirely, so every test unit
/// evaluated at y = c gets the same score M. Kept for reproducing that setup;
/// use clipped_score for prediction-driven selection.
inline double clipped_threshold_score(double y, double c, double M) {
  detail::finite(y, "y");
  detail::finite(c, "c");
  detail::finite(M, "M");
  return y >= c ? M : c;
}

enum class ScoreKind { residual, clipped, clipped_threshold, custom };

inline std::string_view to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::residual: return "res";
    case ScoreKind::clipped: return "clip";
    case ScoreKind::clipped_threshold: return "clip-threshold";
    case ScoreKind::custom: return "custom";
  }
  return "unknown";
}

/// User-supplied score V(mu_hat, y; c). Must be non-decreasing in y.
using ScoreFunction = std::function<double(double mu_hat, double y, double c)>;

/// A nonconformity score selected by kind plus parameters. Evaluation takes
/// the unit's threshold c as a parameter: calibration units are scored at
/// V(x_i, y_i; c_i), test units at V(x_j, c_j; c_j).
class ScoreRule {
 public:
  static ScoreRule residual() { return ScoreRule(ScoreKind::residual, 0.0); }

  static ScoreRule clipped(double M = kDefaultClipConstant) {
    check_clip_constant(M);
    return ScoreRule(ScoreKind::clipped, M);
  }

  static ScoreRule clipped_threshold(double M = kDefaultClipConstant) {
    check_clip_constant(M);
    return ScoreRule(ScoreKind::clipped_threshold, M);
  }

  /// `uses_threshold` says whether the score depends on c beyond its y
  /// argument; when true, calibration units must carry a threshold.
  static ScoreRule custom(std::string name, ScoreFunction fn, bool uses_threshold = true) {
    detail::require(static_cast<bool>(fn), "custom score needs a callable");
    ScoreRule rule(ScoreKind::custom, 0.0);
    rule.name_ = std::move(name);
    rule.fn_ = std::move(fn);
    rule.custom_uses_threshold_ = uses_threshold;
    return rule;
  }

  ScoreKind kind() const noexcept { return kind_; }
  double clip_constant() const noexcept { return clip_; }

  std::string name() const { return kind_ == ScoreKind::custom ? name_ : std::string(to_string(kind_)); }

  bool is_clipped() const noexcept {
    return kind_ == ScoreKind::clipped || kind_ == ScoreKind::clipped_threshold;
  }

  /// Whether calibration scores V(x_i, y_i; c_i) depend on c_i.
  bool uses_threshold() const noexcept {
    if (kind_ == ScoreKind::custom) return custom_uses_threshold_;
    return kind_ != ScoreKind::residual;
  }

  double operator()(double mu_hat, double y, double c) const {
    switch (kind_) {
      case ScoreKind::residual: return residual_score(mu_hat, y);
      case ScoreKind::clipped: return clipped_score(mu_hat, y, c, clip_);
      case ScoreKind::clipped_threshold: return clipped_threshold_score(y, c, clip_);
      case ScoreKind::custom: {
        detail::finite(mu_hat, "mu_hat");
        detail::finite(y, "y");
        return detail::finite(fn_(mu_hat, y, c), "score");
      }
    }
    return 0.0;
  }

 private:
  ScoreRule(ScoreKind kind, double clip) : kind_(kind), clip_(clip) {}

  static void check_clip_constant(double M) {
    detail::finite(M, "M");
    detail::require(M > 0.0, "clip constant M must be positive");
  }

  ScoreKind kind_;
  double clip_;
  std::string name_;
  ScoreFunction fn_;
  bool custom_uses_threshold_ = true;
};

struct MonotoneProbe {
  double mu_hat;
  double y_low;
  double y_high;
  double c = 0.0;
};

struct MonotoneReport {
  bool passed = true;
  std::vector<std::size_t> violations;  // indices into the probe list
};

/// Checks V(x, y_low) <= V(x, y_high) on every probe.
inline MonotoneReport check_monotone(const ScoreRule& rule, std::span<const MonotoneProbe> probes) {
  MonotoneReport report;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& p = probes[i];
    detail::require(p.y_low <= p.y_high, "monotonicity probe needs y_low <= y_high");
    if (rule(p.mu_hat, p.y_low, p.c) > rule(p.mu_hat, p.y_high, p.c)) {
      report.passed = false;
      report.violations.push_back(i);
    }
  }
  return report;
}

/// Warning text when a clipped rule's M falls below 2 max|mu_hat| over the
/// supplied predictions (class separation is then no longer guaranteed).
inline std::optional<std::string> clip_constant_warning(const ScoreRule& rule,
                                                        std::span<const double> predictions) {
  if (rule.kind() != ScoreKind::clipped) return std::nullopt;
  double sup = 0.0;
  for (double mu : predictions) sup = std::max(sup, std::abs(mu));
  if (rule.clip_constant() >= 2.0 * sup) return std::nullopt;
  std::ostringstream os;
  os << "clip constant M=" << rule.clip_constant() << " is below 2*max|prediction|=" << 2.0 * sup
     << "; classes are not guaranteed to separate";
  return os.str();
}

}  // namespace confsel
