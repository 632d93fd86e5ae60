#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "confsel/bh.hpp"
#include "confsel/error.hpp"
#include "confsel/pipeline.hpp"
#include "confsel/random.hpp"
#include "confsel/score.hpp"

namespace confsel::sim {

inline constexpr std::size_t kDim = 20;
using Covariates = std::array<double, kDim>;

/// How the noise column of the DGP table is read. The table writes some
/// entries squared (sigma^2, 2.25 sigma^2) and others not (1.5 sigma,
/// sigma (5.5 - |mu|) / 2) under one header. `as_written` treats squared
/// entries as the variance and the rest as the standard deviation;
/// `all_standard_deviation` treats every entry as the standard deviation.
enum class NoiseReading { as_written, all_standard_deviation };

/// Conditional mean of settings 1-8, x in [-1, 1]^20.
inline double table_mean(int setting, const Covariates& x) {
  const double x1 = x[0], x2 = x[1], x3 = x[2], x4 = x[3];
  switch (setting) {
    case 1:
      return 4.0 * x1 * (x2 > 0.0 ? 1.0 : 0.0) * std::max(0.5, x3) +
             4.0 * x1 * (x2 <= 0.0 ? 1.0 : 0.0) * std::min(x3, -0.5);
    case 2:
    case 3:
    case 4:
      return 5.0 * (x1 * x2 + std::exp(x4 - 1.0));
    case 5:
      return x1 * ((x2 > 0.0 && x4 > 0.5) ? 1.0 : 0.0) * (0.25 + x4) +
             x1 * ((x2 <= 0.0 && x4 < -0.5) ? 1.0 : 0.0) * (x4 - 0.25);
    case 6:
    case 7:
    case 8:
      return 2.0 * (x1 * x2 + x3 * x3 + std::exp(x4 - 1.0) - 1.0);
    default:
      throw ContractError("setting must be in 1..8");
  }
}

/// Noise standard deviation of settings 1-8 at mean value mu.
inline double table_noise_sd(int setting, double mu, double sigma, NoiseReading reading) {
  const double a = std::abs(mu);
  const bool squared_is_variance = reading == NoiseReading::as_written;
  switch (setting) {
    case 1:
    case 5:
      // "sigma^2" and "sigma"
      return setting == 1 && !squared_is_variance ? sigma * sigma : sigma;
    case 2:
      // "2.25 sigma^2"
      return squared_is_variance ? 1.5 * sigma : 2.25 * sigma * sigma;
    case 6:
      return 1.5 * sigma;
    case 3:
    case 7:
      // Negative for |mu| > 5.5 (reachable in setting 3); only the square
      // enters the normal law.
      return std::abs(sigma * (5.5 - a) / 2.0);
    case 4:
    case 8:
      // Both indicator terms apply on 1 <= |mu| < 2; summed as written.
      return sigma * 0.25 * mu * mu * (a < 2.0 ? 1.0 : 0.0) + sigma * 0.5 * a * (a >= 1.0 ? 1.0 : 0.0);
    default:
      throw ContractError("setting must be in 1..8");
  }
}

/// A data-generating process: x ~ Unif[-1,1]^20, y = mu(x) + N(0, sd(x)^2).
class Dgp {
 public:
  using MeanFn = std::function<double(const Covariates&)>;
  using SdFn = std::function<double(const Covariates&, double mu)>;

  static Dgp table(int setting, double sigma, NoiseReading reading = NoiseReading::as_written) {
    detail::require(setting >= 1 && setting <= 8, "setting must be in 1..8");
    detail::require(std::isfinite(sigma) && sigma > 0.0, "sigma must be positive");
    Dgp d;
    d.setting_ = setting;
    d.sigma_ = sigma;
    d.label_ = std::to_string(setting);
    d.mean_ = [setting](const Covariates& x) { return table_mean(setting, x); };
    d.sd_ = [setting, sigma, reading](const Covariates&, double mu) {
      return table_noise_sd(setting, mu, sigma, reading);
    };
    return d;
  }

  /// Arbitrary mean / noise functions (pure-null and tie-saturated checks).
  static Dgp custom(std::string label, MeanFn mean, SdFn sd, double sigma = 1.0) {
    Dgp d;
    d.label_ = std::move(label);
    d.sigma_ = sigma;
    d.mean_ = std::move(mean);
    d.sd_ = std::move(sd);
    return d;
  }

  std::optional<int> setting() const noexcept { return setting_; }
  double sigma() const noexcept { return sigma_; }
  const std::string& label() const noexcept { return label_; }

  double mean(const Covariates& x) const { return mean_(x); }
  double noise_sd(const Covariates& x, double mu) const { return sd_(x, mu); }

 private:
  Dgp() = default;

  std::optional<int> setting_;
  double sigma_ = 1.0;
  std::string label_;
  MeanFn mean_;
  SdFn sd_;
};

struct Row {
  Covariates x{};
  double mu = 0.0;
  double y = 0.0;
};

/// n i.i.d. rows drawn from `dgp` with `rng`.
inline std::vector<Row> generate(const Dgp& dgp, std::size_t n, Rng& rng) {
  std::vector<Row> rows(n);
  for (auto& r : rows) {
    for (auto& xi : r.x) xi = rng.uniform(-1.0, 1.0);
    r.mu = dgp.mean(r.x);
    r.y = r.mu + dgp.noise_sd(r.x, r.mu) * rng.normal();
  }
  return rows;
}

inline std::vector<Row> generate(const Dgp& dgp, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return generate(dgp, n, rng);
}

/// Brute-force k-nearest-neighbour regression in Euclidean distance.
class KnnRegressor {
 public:
  KnnRegressor(std::vector<Row> train, std::size_t k) : train_(std::move(train)), k_(k) {
    detail::require(k_ >= 1, "k must be at least 1");
    detail::require(!train_.empty(), "k-NN needs training rows");
    k_ = std::min(k_, train_.size());
  }

  double operator()(const Covariates& x) const {
    std::vector<std::pair<double, double>> dist(train_.size());
    for (std::size_t i = 0; i < train_.size(); ++i) {
      double d = 0.0;
      for (std::size_t a = 0; a < kDim; ++a) {
        const double diff = train_[i].x[a] - x[a];
        d += diff * diff;
      }
      dist[i] = {d, train_[i].y};
    }
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_ - 1), dist.end());
    std::sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_));
    double sum = 0.0;
    for (std::size_t i = 0; i < k_; ++i) sum += dist[i].second;
    return sum / static_cast<double>(k_);
  }

 private:
  std::vector<Row> train_;
  std::size_t k_;
};

/// Source of predictions mu_hat. `oracle` uses the true mean; `knn` fits
/// on a fresh training draw each repetition; `custom` wraps any external
/// model.
struct Predictor {
  enum class Kind { oracle, knn, custom };

  Kind kind = Kind::oracle;
  std::size_t k = 20;
  std::function<double(const Covariates&)> model;

  static Predictor oracle() { return {}; }
  static Predictor knn(std::size_t k = 20) { return {Kind::knn, k, {}}; }
  static Predictor custom(std::function<double(const Covariates&)> fn) { return {Kind::custom, 0, std::move(fn)}; }

  std::string name() const {
    switch (kind) {
      case Kind::oracle: return "oracle";
      case Kind::knn: return "knn" + std::to_string(k);
      case Kind::custom: return "custom";
    }
    return "unknown";
  }
};

/// The three compared configurations: BH on randomized conformal p-values
/// with the residual score (res) or the clipped score (clip), and
/// same-class calibration (sub).
enum class ScoreConfig { res, clip, sub };

inline std::string_view to_string(ScoreConfig s) {
  switch (s) {
    case ScoreConfig::res: return "res";
    case ScoreConfig::clip: return "clip";
    case ScoreConfig::sub: return "sub";
  }
  return "unknown";
}

inline ScoreConfig parse_score_config(std::string_view s) {
  if (s == "res") return ScoreConfig::res;
  if (s == "clip") return ScoreConfig::clip;
  if (s == "sub") return ScoreConfig::sub;
  throw ContractError("unknown score configuration '" + std::string(s) + "' (expected res, clip or sub)");
}

struct McConfig {
  Dgp dgp = Dgp::table(1, 1.0);
  std::size_t n_train = 200;  // used by the k-NN predictor only
  std::size_t n_calib = 200;
  std::size_t n_test = 200;
  double q = 0.1;
  double threshold = 0.0;
  double clip_constant = kDefaultClipConstant;
  std::vector<ScoreConfig> scores = {ScoreConfig::res, ScoreConfig::clip, ScoreConfig::sub};
  Predictor predictor = Predictor::oracle();
  std::size_t reps = 500;
  std::uint64_t seed = 0;
};

/// One aggregated configuration.
struct McRow {
  std::string setting;
  std::string score;
  std::string method;
  double q = 0.0;
  double sigma = 0.0;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t reps = 0;
  double fdr_mean = 0.0;
  double fdr_se = 0.0;
  double power_mean = 0.0;
  double power_se = 0.0;
  double nsel_mean = 0.0;
  std::size_t ties = 0;

  bool operator==(const McRow&) const = default;
};

struct McReport {
  std::vector<McRow> rows;
  std::uint64_t seed = 0;
  std::size_t reps = 0;
  bool tie_flagged = false;  // some deterministic p-value met a tie

  bool operator==(const McReport&) const = default;
};

namespace detail {

struct Accumulator {
  std::vector<double> fdp, power, nsel;
  std::size_t ties = 0;

  void add(const ErrorMetrics& e) {
    fdp.push_back(e.fdp);
    power.push_back(e.power);
    nsel.push_back(static_cast<double>(e.n_selected));
  }
};

// Mean and standard error, reduced in index order.
inline std::pair<double, double> mean_se(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const auto n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

inline McRow summarize(const McConfig& cfg, std::string_view score, std::string_view method, const Accumulator& acc) {
  McRow row;
  row.setting = cfg.dgp.label();
  row.score = std::string(score);
  row.method = std::string(method);
  row.q = cfg.q;
  row.sigma = cfg.dgp.sigma();
  row.n = cfg.n_calib;
  row.m = cfg.n_test;
  row.reps = acc.fdp.size();
  std::tie(row.fdr_mean, row.fdr_se) = mean_se(acc.fdp);
  std::tie(row.power_mean, row.power_se) = mean_se(acc.power);
  row.nsel_mean = mean_se(acc.nsel).first;
  row.ties = acc.ties;
  return row;
}

inline std::vector<double> predict(const McConfig& cfg, const std::vector<Row>& rows,
                                   const std::optional<KnnRegressor>& knn) {
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    switch (cfg.predictor.kind) {
      case Predictor::Kind::oracle: out[i] = rows[i].mu; break;
      case Predictor::Kind::knn: out[i] = (*knn)(rows[i].x); break;
      case Predictor::Kind::custom: out[i] = cfg.predictor.model(rows[i].x); break;
    }
  }
  return out;
}

inline std::vector<Unit> to_units(const std::vector<Row>& rows, const std::vector<double>& pred) {
  std::vector<Unit> units(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    units[i].prediction = pred[i];
    units[i].outcome = rows[i].y;
  }
  return units;
}

inline void check_config(const McConfig& cfg) {
  confsel::detail::check_level(cfg.q);
  confsel::detail::require(cfg.n_calib > 0 && cfg.n_test > 0 && cfg.reps > 0, "sizes and repetitions must be positive");
  confsel::detail::require(!cfg.scores.empty(), "no score configuration requested");
  confsel::detail::require(cfg.predictor.kind != Predictor::Kind::knn || cfg.n_train > 0,
                           "k-NN predictor needs training rows");
  confsel::detail::require(cfg.predictor.kind != Predictor::Kind::custom || static_cast<bool>(cfg.predictor.model),
                           "custom predictor needs a model");
}

}  // namespace detail

/// Monte Carlo estimate of FDR, power and selection size. Each repetition
/// draws fresh calibration and test sets (and training set for k-NN), runs
/// the selection pipeline for every requested score configuration with a
/// shared tie-breaking stream, and scores the selection against 1{y > c}.
/// Repetition r uses seeds derived from (cfg.seed, r) only, so results do
/// not depend on execution order.
inline McReport monte_carlo(const McConfig& cfg) {
  detail::check_config(cfg);
  std::vector<detail::Accumulator> acc(cfg.scores.size());
  const auto spec = ThresholdSpec::constant(cfg.threshold);

  for (std::size_t rep = 0; rep < cfg.reps; ++rep) {
    const std::uint64_t rep_seed = derive_seed(cfg.seed, rep);
    Rng rng(derive_seed(rep_seed, 1));
    std::optional<KnnRegressor> knn;
    if (cfg.predictor.kind == Predictor::Kind::knn) knn.emplace(generate(cfg.dgp, cfg.n_train, rng), cfg.predictor.k);
    const auto calib = generate(cfg.dgp, cfg.n_calib, rng);
    const auto test = generate(cfg.dgp, cfg.n_test, rng);

    Dataset data;
    data.calibration = detail::to_units(calib, detail::predict(cfg, calib, knn));
    data.test = detail::to_units(test, detail::predict(cfg, test, knn));
    const auto u = TieBreaker::seeded(derive_seed(rep_seed, 2));

    for (std::size_t s = 0; s < cfg.scores.size(); ++s) {
      const ScoreConfig sc = cfg.scores[s];
      const ScoreRule rule = sc == ScoreConfig::res ? ScoreRule::residual() : ScoreRule::clipped(cfg.clip_constant);
      const auto method = sc == ScoreConfig::sub ? SelectionMethod::same_class : SelectionMethod::randomized;
      const auto report = select(data, rule, spec, method, cfg.q, u);
      acc[s].add(*report.metrics);
    }
  }

  McReport out;
  out.seed = cfg.seed;
  out.reps = cfg.reps;
  for (std::size_t s = 0; s < cfg.scores.size(); ++s) {
    const auto method = cfg.scores[s] == ScoreConfig::sub ? SelectionMethod::same_class : SelectionMethod::randomized;
    out.rows.push_back(detail::summarize(cfg, to_string(cfg.scores[s]), to_string(method), acc[s]));
  }
  return out;
}

/// Finite-population experiment: each repetition draws a population of
/// `population_size` rows once, then samples calibration and test sets
/// jointly without replacement and runs BH on deterministic p-values.
/// Same-class (`sub`) entries are rejected: that construction is
/// randomized by definition.
inline McReport exchangeable_experiment(const McConfig& cfg, std::size_t population_size = 2000) {
  detail::check_config(cfg);
  confsel::detail::require(cfg.n_calib + cfg.n_test <= population_size,
                           "calibration plus test size exceeds the population");
  for (auto sc : cfg.scores) {
    confsel::detail::require(sc != ScoreConfig::sub, "the exchangeable experiment uses deterministic p-values only");
  }
  std::vector<detail::Accumulator> acc(cfg.scores.size());
  const auto spec = ThresholdSpec::constant(cfg.threshold);

  for (std::size_t rep = 0; rep < cfg.reps; ++rep) {
    const std::uint64_t rep_seed = derive_seed(cfg.seed, rep);
    Rng rng(derive_seed(rep_seed, 1));
    std::optional<KnnRegressor> knn;
    if (cfg.predictor.kind == Predictor::Kind::knn) knn.emplace(generate(cfg.dgp, cfg.n_train, rng), cfg.predictor.k);
    const auto population = generate(cfg.dgp, population_size, rng);
    const auto pick = rng.sample_without_replacement(population_size, cfg.n_calib + cfg.n_test);
    std::vector<Row> calib, test;
    for (std::size_t i = 0; i < pick.size(); ++i) (i < cfg.n_calib ? calib : test).push_back(population[pick[i]]);

    Dataset data;
    data.calibration = detail::to_units(calib, detail::predict(cfg, calib, knn));
    data.test = detail::to_units(test, detail::predict(cfg, test, knn));

    for (std::size_t s = 0; s < cfg.scores.size(); ++s) {
      const ScoreRule rule =
          cfg.scores[s] == ScoreConfig::res ? ScoreRule::residual() : ScoreRule::clipped(cfg.clip_constant);
      const auto report = select(data, rule, spec, SelectionMethod::deterministic, cfg.q, std::nullopt);
      acc[s].add(*report.metrics);
      acc[s].ties += report.ties;
    }
  }

  McReport out;
  out.seed = cfg.seed;
  out.reps = cfg.reps;
  for (std::size_t s = 0; s < cfg.scores.size(); ++s) {
    out.rows.push_back(detail::summarize(cfg, to_string(cfg.scores[s]), "dtm", acc[s]));
    out.tie_flagged = out.tie_flagged || acc[s].ties > 0;
  }
  return out;
}

}  // namespace confsel::sim
