#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "confsel/bh.hpp"
#include "confsel/error.hpp"
#include "confsel/random.hpp"
#include "confsel/score.hpp"

namespace confsel {

/// Plug-in estimate of F(v, u) = P(V < v) + u P(V = v) from a sample of
/// V(X, Y). Argument order is (score, uniform).
class EmpiricalF {
 public:
  explicit EmpiricalF(std::vector<double> sample) : sorted_(std::move(sample)) {
    detail::require(!sorted_.empty(), "empirical F needs a nonempty sample");
    for (double v : sorted_) detail::finite(v, "population score");
    std::sort(sorted_.begin(), sorted_.end());
  }

  double operator()(double v, double u) const {
    detail::require(u >= 0.0 && u <= 1.0, "u must lie in [0,1]");
    auto [lo, hi] = std::equal_range(sorted_.begin(), sorted_.end(), v);
    const auto below = static_cast<double>(lo - sorted_.begin());
    const auto equal = static_cast<double>(hi - lo);
    return (below + u * equal) / static_cast<double>(sorted_.size());
  }

  std::span<const double> sorted() const noexcept { return sorted_; }

 private:
  std::vector<double> sorted_;
};

/// Population draws for the large-sample analysis, all at one threshold c:
/// v_full = V(X, Y), v_null = V(X, c), y_exceeds = 1{Y > c}.
struct PopulationSample {
  std::vector<double> v_full;
  std::vector<double> v_null;
  std::vector<bool> y_exceeds;

  std::size_t size() const noexcept { return v_full.size(); }

  void validate() const {
    detail::require(!v_full.empty(), "population sample is empty");
    detail::require(v_null.size() == v_full.size() && y_exceeds.size() == v_full.size(),
                    "population columns must have equal lengths");
    for (double v : v_full) detail::finite(v, "v_full");
    for (double v : v_null) detail::finite(v, "v_null");
  }
};

/// Scores a population of (prediction, outcome) pairs at threshold c.
inline PopulationSample make_population(std::span<const double> mu_hat, std::span<const double> y, double c,
                                        const ScoreRule& rule) {
  detail::require(mu_hat.size() == y.size(), "prediction and outcome columns differ in length");
  PopulationSample pop;
  pop.v_full.reserve(y.size());
  pop.v_null.reserve(y.size());
  pop.y_exceeds.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    pop.v_full.push_back(rule(mu_hat[i], y[i], c));
    pop.v_null.push_back(rule(mu_hat[i], c, c));
    pop.y_exceeds.push_back(y[i] > c);
  }
  return pop;
}

struct TStarOptions {
  double epsilon = 1e-3;  // window (t* - epsilon, t*) for the technical condition
  double margin = 1e-6;   // strictness margin: ratio must be below q - margin
};

struct TStarResult {
  double t_star = 0.0;
  bool condition_flag = false;
};

/// t* = sup{t in [0,1] : t / P(F <= t) <= q} over the empirical
/// distribution of the supplied F-values. The empirical criterion only
/// changes at the sample values, so this is the threshold form of BH run on
/// the F-values with m = N.
inline TStarResult solve_tstar(std::span<const double> f_values, double q, const TStarOptions& options = {}) {
  detail::check_level(q);
  detail::require(!f_values.empty(), "t* needs at least one F-value");
  TStarResult out;
  out.t_star = bh_threshold(f_values, q);
  if (out.t_star <= 0.0) return out;

  std::vector<double> sorted(f_values.begin(), f_values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto ratio = [&](double t) {
    const auto count = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
    return count == 0.0 ? std::numeric_limits<double>::infinity() : t / (count / n);
  };
  // t / G(t) increases on each piece where G is constant, so its infimum over
  // the window sits at the window's left edge or at a breakpoint inside it.
  const double left = std::max(0.0, out.t_star - options.epsilon);
  const double target = q - options.margin;
  const double first = std::nextafter(left, out.t_star);
  if (first < out.t_star && ratio(first) < target) {
    out.condition_flag = true;
    return out;
  }
  for (auto it = std::upper_bound(sorted.begin(), sorted.end(), left); it != sorted.end() && *it < out.t_star; ++it) {
    if (ratio(*it) < target) {
      out.condition_flag = true;
      break;
    }
  }
  return out;
}

struct AsymptoticReport {
  double t_star = 0.0;
  double fdr_limit = 0.0;
  double power_limit = 0.0;
  bool condition_flag = false;
  // sup{v : P(V(X,Y) <= v) <= t*}; +inf when every score qualifies. Only a
  // diagnostic.
  double v_star = 0.0;
  std::size_t n_pop = 0;

  bool operator==(const AsymptoticReport&) const = default;
};

/// Plug-in limits of FDR and power for BH on conformal p-values as
/// calibration and test sizes grow, evaluated on one population sample.
inline AsymptoticReport asymptotic_fdr_power(const PopulationSample& pop, double q, std::uint64_t seed,
                                             const TStarOptions& options = {}) {
  detail::check_level(q);
  pop.validate();
  const EmpiricalF f(pop.v_full);
  const std::size_t n = pop.size();

  std::vector<double> f_null(n);
  for (std::size_t i = 0; i < n; ++i) f_null[i] = f(pop.v_null[i], uniform_at(seed, i));

  AsymptoticReport out;
  out.n_pop = n;
  const TStarResult ts = solve_tstar(f_null, q, options);
  out.condition_flag = ts.condition_flag;

  std::size_t selected = 0, false_selected = 0, true_selected = 0, exceeding = 0;
  for (std::size_t i = 0; i < n; ++i) {
    exceeding += pop.y_exceeds[i] ? 1 : 0;
    if (ts.t_star > 0.0 && f_null[i] <= ts.t_star) {
      ++selected;
      (pop.y_exceeds[i] ? true_selected : false_selected) += 1;
    }
  }
  if (selected == 0) {
    out.v_star = f.sorted().front();
    return out;
  }
  out.t_star = ts.t_star;
  out.fdr_limit = static_cast<double>(false_selected) / static_cast<double>(selected);
  out.power_limit = exceeding == 0 ? 0.0 : static_cast<double>(true_selected) / static_cast<double>(exceeding);

  // largest k with k / n <= t*
  const auto sorted = f.sorted();
  auto k = static_cast<std::size_t>(std::floor(out.t_star * static_cast<double>(n)));
  while (k < n && static_cast<double>(k + 1) / static_cast<double>(n) <= out.t_star) ++k;
  while (k > 0 && static_cast<double>(k) / static_cast<double>(n) > out.t_star) --k;
  out.v_star = k < n ? sorted[k] : std::numeric_limits<double>::infinity();
  return out;
}

/// Population whose residual-score F-values are exactly the mixture
/// (alt_fraction) * delta_0 + (1 - alt_fraction) * Unif[0,1] at threshold 0:
///   with probability alt_fraction: prediction 2, outcome ~ Unif(1, 2);
///   otherwise:                     prediction ~ Unif(0, 1), outcome 0.
/// Residual scores V(X, Y) are Unif(-1, 0) for both kinds and V(X, 0) = -2
/// for the first kind. Under the clipped score the positive units sit
/// exactly above every null unit, which is the ordering where FDR is
/// exhausted.
struct PopulationRows {
  std::vector<double> prediction;
  std::vector<double> outcome;
};

inline PopulationRows mixture_population(std::size_t n, std::uint64_t seed, double alt_fraction = 0.5) {
  detail::require(alt_fraction >= 0.0 && alt_fraction <= 1.0, "mixture fraction must lie in [0,1]");
  Rng rng(seed);
  PopulationRows rows;
  rows.prediction.reserve(n);
  rows.outcome.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() < alt_fraction) {
      rows.prediction.push_back(2.0);
      rows.outcome.push_back(rng.uniform(1.0, 2.0));
    } else {
      rows.prediction.push_back(rng.uniform());
      rows.outcome.push_back(0.0);
    }
  }
  return rows;
}

/// Every unit null: prediction ~ Unif(0, 1), outcome 0.
inline PopulationRows pure_null_population(std::size_t n, std::uint64_t seed) {
  return mixture_population(n, seed, 0.0);
}

}  // namespace confsel
