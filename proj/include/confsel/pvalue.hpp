#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "confsel/error.hpp"
#include "confsel/random.hpp"
#include "confsel/score.hpp"

namespace confsel {

/// Calibration scores V_1..V_n, held sorted so that the rank counts behind
/// every p-value are two binary searches. Ties are exact (bitwise) equality.
class CalibrationScores {
 public:
  explicit CalibrationScores(std::vector<double> scores) : sorted_(std::move(scores)) {
    if (sorted_.empty()) throw ContractError("calibration set is empty");
    for (double v : sorted_) detail::finite(v, "calibration score");
    std::sort(sorted_.begin(), sorted_.end());
  }

  std::size_t size() const noexcept { return sorted_.size(); }
  std::span<const double> sorted() const noexcept { return sorted_; }

  std::size_t count_below(double v) const {
    return static_cast<std::size_t>(std::lower_bound(sorted_.begin(), sorted_.end(), v) - sorted_.begin());
  }

  std::size_t count_equal(double v) const {
    auto [lo, hi] = std::equal_range(sorted_.begin(), sorted_.end(), v);
    return static_cast<std::size_t>(hi - lo);
  }

 private:
  std::vector<double> sorted_;
};

enum class PValueMethod { randomized, deterministic, same_class, oracle };

inline std::string_view to_string(PValueMethod m) {
  switch (m) {
    case PValueMethod::randomized: return "rand";
    case PValueMethod::deterministic: return "dtm";
    case PValueMethod::same_class: return "sub";
    case PValueMethod::oracle: return "oracle";
  }
  return "unknown";
}

struct PValueVector {
  std::vector<double> p;
  PValueMethod method = PValueMethod::randomized;
  std::optional<std::uint64_t> seed;
  // Calibration scores exactly equal to a test score, summed over test
  // units. Only meaningful for the deterministic construction, whose
  // guarantee assumes there are none.
  std::size_t ties = 0;
};

namespace detail {

inline double conformal_rank(const CalibrationScores& calib, double v, double u) {
  require(u >= 0.0 && u <= 1.0, "tie-breaking u must lie in [0,1]");
  finite(v, "test score");
  const double below = static_cast<double>(calib.count_below(v));
  const double equal = static_cast<double>(calib.count_equal(v));
  return (below + u * (1.0 + equal)) / static_cast<double>(calib.size() + 1);
}

}  // namespace detail

/// (#{V_i < v_hat} + u (1 + #{V_i = v_hat})) / (n + 1), where v_hat is the
/// test unit's score evaluated at its threshold.
inline double randomized_pvalue(const CalibrationScores& calib, double v_hat, double u) {
  return detail::conformal_rank(calib, v_hat, u);
}

/// (1 + #{V_i < v_hat}) / (n + 1). Valid for exchangeable data without ties;
/// ties are counted with strict inequality and do not raise.
inline double deterministic_pvalue(const CalibrationScores& calib, double v_hat) {
  detail::finite(v_hat, "test score");
  return (1.0 + static_cast<double>(calib.count_below(v_hat))) / static_cast<double>(calib.size() + 1);
}

/// Same counting formula applied to the unobservable true score
/// V(x_j, y_j). Simulation and testing only.
inline double oracle_pvalue(const CalibrationScores& calib, double v_true, double u) {
  return detail::conformal_rank(calib, v_true, u);
}

inline PValueVector randomized_pvalues(const CalibrationScores& calib, std::span<const double> v_hat,
                                       const TieBreaker& u) {
  PValueVector out;
  out.method = PValueMethod::randomized;
  out.seed = u.seed();
  out.p.reserve(v_hat.size());
  for (std::size_t j = 0; j < v_hat.size(); ++j) out.p.push_back(randomized_pvalue(calib, v_hat[j], u(j)));
  return out;
}

inline PValueVector deterministic_pvalues(const CalibrationScores& calib, std::span<const double> v_hat) {
  PValueVector out;
  out.method = PValueMethod::deterministic;
  out.p.reserve(v_hat.size());
  for (double v : v_hat) {
    out.p.push_back(deterministic_pvalue(calib, v));
    out.ties += calib.count_equal(v);
  }
  return out;
}

/// Same-class calibration: ranks test scores among V(x_i, c_i) of the
/// calibration units whose outcome does not exceed the threshold.
inline PValueVector same_class_pvalues(std::span<const double> class0_scores,
                                       std::span<const double> test_scores, const TieBreaker& u) {
  if (class0_scores.empty()) {
    throw ContractError("same-class calibration needs at least one calibration unit with outcome <= threshold");
  }
  const CalibrationScores calib(std::vector<double>(class0_scores.begin(), class0_scores.end()));
  PValueVector out = randomized_pvalues(calib, test_scores, u);
  out.method = PValueMethod::same_class;
  return out;
}

}  // namespace confsel
