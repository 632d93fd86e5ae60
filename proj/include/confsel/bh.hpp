#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "confsel/error.hpp"

namespace confsel {

struct SelectionResult {
  std::vector<std::size_t> selected;  // ascending unit indices
  std::size_t k_star = 0;
  double tau_hat = 0.0;  // q k* / m, zero when nothing is selected
  double q = 0.0;

  bool operator==(const SelectionResult&) const = default;
};

struct ErrorMetrics {
  double fdp = 0.0;
  double power = 0.0;
  std::size_t n_selected = 0;
  std::size_t n_false = 0;
  std::size_t n_true_selected = 0;
  std::size_t n_true = 0;

  bool operator==(const ErrorMetrics&) const = default;
};

namespace detail {

inline void check_level(double q) { require(q > 0.0 && q < 1.0, "q must be in (0,1)"); }

inline void check_pvalues(std::span<const double> p) {
  for (double v : p) require(v >= 0.0 && v <= 1.0, "p-values must lie in [0,1]");
}

// BH cutoff for k rejections. Every comparison against a step-up cutoff goes
// through this expression so that equal inputs give bitwise-equal cutoffs.
inline double step_up_cutoff(double q, std::size_t k, std::size_t m) {
  return q * static_cast<double>(k) / static_cast<double>(m);
}

}  // namespace detail

/// Benjamini-Hochberg step-up: k* is the largest k with
/// #{p_j <= q k / m} >= k, and the selection is {j : p_j <= q k* / m}.
inline SelectionResult bh_select(std::span<const double> p, double q) {
  detail::check_level(q);
  detail::check_pvalues(p);
  SelectionResult out;
  out.q = q;
  const std::size_t m = p.size();
  if (m == 0) return out;

  std::vector<double> sorted(p.begin(), p.end());
  std::sort(sorted.begin(), sorted.end());
  // #{p_j <= t} >= k  <=>  p_(k) <= t
  for (std::size_t k = m; k >= 1; --k) {
    if (sorted[k - 1] <= detail::step_up_cutoff(q, k, m)) {
      out.k_star = k;
      break;
    }
  }
  if (out.k_star == 0) return out;

  out.tau_hat = detail::step_up_cutoff(q, out.k_star, m);
  for (std::size_t j = 0; j < m; ++j) {
    if (p[j] <= out.tau_hat) out.selected.push_back(j);
  }
  return out;
}

/// Threshold form of BH: sup{t in [0,1] : m t / #{p_j <= t} <= q}, with the
/// supremum taken as 0 when the set holds no positive t. The count is a step
/// function, so the supremum is found exactly by walking the distinct
/// p-values: on [a, b) with count k the admissible t are t <= q k / m.
inline double bh_threshold(std::span<const double> p, double q) {
  detail::check_level(q);
  detail::check_pvalues(p);
  const std::size_t m = p.size();
  if (m == 0) return 0.0;

  std::vector<double> sorted(p.begin(), p.end());
  std::sort(sorted.begin(), sorted.end());
  double sup = 0.0;
  std::size_t i = 0;
  while (i < m) {
    const double a = sorted[i];
    std::size_t k = i;
    while (k < m && sorted[k] == a) ++k;  // count(t) = k on [a, b)
    const double b = k < m ? sorted[k] : 1.0;
    const double cutoff = detail::step_up_cutoff(q, k, m);
    if (cutoff >= a) sup = std::max(sup, std::min(cutoff, b));
    i = k;
  }
  return sup;
}

/// False discovery proportion and power of a selection against the truth
/// vector truth[j] = 1{y_j > c_j}, both with 1 v (.) denominators.
inline ErrorMetrics metrics(std::span<const std::size_t> selected, const std::vector<bool>& truth) {
  ErrorMetrics out;
  for (bool t : truth) out.n_true += t ? 1 : 0;
  for (std::size_t j : selected) {
    detail::require(j < truth.size(), "selected index outside the truth vector");
    if (truth[j]) {
      ++out.n_true_selected;
    } else {
      ++out.n_false;
    }
  }
  out.n_selected = selected.size();
  out.fdp = static_cast<double>(out.n_false) / static_cast<double>(std::max<std::size_t>(1, out.n_selected));
  out.power =
      static_cast<double>(out.n_true_selected) / static_cast<double>(std::max<std::size_t>(1, out.n_true));
  return out;
}

}  // namespace confsel
