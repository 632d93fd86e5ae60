#pragma once

// Reference implementations used only by the tests. Each one follows the
// defining formula literally (linear scans, exhaustive search) and shares no
// code with the library path it checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace confsel::oracle {

/// Conformal p-value by a linear scan over calibration scores.
inline double conformal_pvalue(std::span<const double> calib, double v, double u) {
  double below = 0.0, equal = 0.0;
  for (double s : calib) {
    if (s < v) below += 1.0;
    if (s == v) equal += 1.0;
  }
  return (below + u * (1.0 + equal)) / (static_cast<double>(calib.size()) + 1.0);
}

/// k* by trying every k = 1..m and counting #{p_j <= q k / m} directly.
inline std::size_t bh_k_star(std::span<const double> p, double q) {
  const std::size_t m = p.size();
  std::size_t best = 0;
  for (std::size_t k = 1; k <= m; ++k) {
    const double cutoff = q * static_cast<double>(k) / static_cast<double>(m);
    std::size_t count = 0;
    for (double v : p) count += v <= cutoff ? 1 : 0;
    if (count >= k) best = k;
  }
  return best;
}

inline std::vector<std::size_t> bh_selection(std::span<const double> p, double q) {
  const std::size_t k = bh_k_star(p, q);
  std::vector<std::size_t> out;
  if (k == 0) return out;
  const double cutoff = q * static_cast<double>(k) / static_cast<double>(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] <= cutoff) out.push_back(j);
  }
  return out;
}

/// Fixed point of t = q (pi + (1 - pi) t): the largest t with
/// t / P(F <= t) <= q when F has mass pi at 0 and is uniform otherwise.
inline double mixture_t_star(double q, double mass_at_zero) {
  return q * mass_at_zero / (1.0 - q * (1.0 - mass_at_zero));
}

/// Kolmogorov-Smirnov statistic of a sample against Unif[0,1].
inline double ks_uniform(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max({d, x[i] - lo, hi - x[i]});
  }
  return d;
}

/// Asymptotic KS critical value sqrt(-ln(alpha / 2) / 2) / sqrt(n).
inline double ks_critical(double alpha, std::size_t n) {
  return std::sqrt(-std::log(alpha / 2.0) / 2.0) / std::sqrt(static_cast<double>(n));
}

}  // namespace confsel::oracle
