#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "confsel/asymptotics.hpp"
#include "confsel/csv.hpp"
#include "confsel/error.hpp"
#include "confsel/pipeline.hpp"
#include "confsel/report.hpp"
#include "confsel/sim.hpp"
#include "confsel/version.hpp"

namespace confsel::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIo = 3;

using io::Json;

// ---------------------------------------------------------------- select

struct SelectConfig {
  std::string calib;
  std::string test;
  std::string pred;
  std::string outcome = "outcome";
  std::optional<std::string> group;
  std::optional<std::string> id;
  std::optional<std::string> threshold_col;
  std::optional<double> threshold_const;
  std::optional<double> group_quantile;
  std::optional<std::string> train;
  std::optional<std::string> train_outcome;
  bool threshold_from_calibration = false;
  std::string score = "clip";
  double clip_constant = kDefaultClipConstant;
  std::string method = "rand";
  double q = 0.0;
  std::optional<std::uint64_t> seed;
  std::string out;

  Json to_json() const {
    Json j;
    j["calib"] = calib;
    j["test"] = test;
    j["pred"] = pred;
    j["outcome"] = outcome;
    j["group"] = group ? Json(*group) : Json(nullptr);
    j["id"] = id ? Json(*id) : Json(nullptr);
    Json t;
    if (threshold_col) {
      t = Json{{"mode", "per_sample"}, {"column", *threshold_col}};
    } else if (group_quantile) {
      t = Json{{"mode", "group_quantile"}, {"q_pop", *group_quantile}, {"train", train.value_or("")}};
    } else {
      t = Json{{"mode", "constant"},
               {"tau", threshold_const.value_or(0.0)},
               {"derived_from_calibration", threshold_from_calibration}};
    }
    j["threshold"] = std::move(t);
    j["score"] = score;
    j["clip_M"] = clip_constant;
    j["method"] = method;
    j["q"] = q;
    j["seed"] = seed ? Json(*seed) : Json(nullptr);
    return j;
  }
};

namespace detail {

inline std::vector<Unit> load_units(const io::CsvTable& t, const SelectConfig& cfg, bool calibration) {
  const auto pred = t.column(cfg.pred);
  const auto outcome = calibration ? std::optional(t.column(cfg.outcome)) : t.find_column(cfg.outcome);
  const auto group = cfg.group ? std::optional(t.column(*cfg.group)) : std::nullopt;
  std::optional<std::size_t> threshold;
  if (cfg.threshold_col) threshold = calibration ? t.find_column(*cfg.threshold_col) : t.column(*cfg.threshold_col);

  std::vector<Unit> units(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    units[r].prediction = t.real(r, pred);
    if (outcome) units[r].outcome = calibration ? t.real(r, *outcome) : t.optional_real(r, *outcome);
    if (group) units[r].group = t.text(r, *group);
    if (threshold) units[r].threshold = calibration ? t.optional_real(r, *threshold) : t.real(r, *threshold);
  }
  return units;
}

inline GroupedOutcomes load_training(const SelectConfig& cfg) {
  if (!cfg.train) throw ContractError("--group-quantile needs --train with per-group training outcomes");
  if (!cfg.group) throw ContractError("--group-quantile needs --group");
  const auto t = io::read_csv(*cfg.train);
  const auto g = t.column(*cfg.group);
  const auto y = t.column(cfg.train_outcome.value_or(cfg.outcome));
  GroupedOutcomes out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) out[t.text(r, g)].push_back(t.real(r, y));
  return out;
}

inline ThresholdSpec threshold_spec(const SelectConfig& cfg) {
  const int modes = (cfg.threshold_col ? 1 : 0) + (cfg.threshold_const ? 1 : 0) + (cfg.group_quantile ? 1 : 0);
  if (modes > 1) throw ContractError("choose one of --threshold-col, --threshold-const, --group-quantile");
  if (cfg.threshold_col) return ThresholdSpec::per_sample();
  if (cfg.group_quantile) {
    if (!(*cfg.group_quantile > 0.0 && *cfg.group_quantile < 1.0)) {
      throw ContractError("--group-quantile must be in (0,1)");
    }
    return ThresholdSpec::group_quantile(*cfg.group_quantile);
  }
  return ThresholdSpec::constant(cfg.threshold_const.value_or(0.0), cfg.threshold_from_calibration);
}

}  // namespace detail

/// Runs the selection, writes the report to cfg.out and prints a summary.
inline Json run_select(const SelectConfig& cfg, std::ostream& out) {
  if (!(cfg.q > 0.0 && cfg.q < 1.0)) throw ContractError("q must be in (0,1)");
  const auto method = io::parse_method(cfg.method);
  const auto rule = io::parse_score(cfg.score, cfg.clip_constant);
  if (method != SelectionMethod::deterministic && !cfg.seed) {
    throw ContractError("--seed is required for method " + cfg.method);
  }
  const auto spec = detail::threshold_spec(cfg);

  const auto calib_table = io::read_csv(cfg.calib);
  const auto test_table = io::read_csv(cfg.test);
  Dataset data;
  data.calibration = detail::load_units(calib_table, cfg, true);
  data.test = detail::load_units(test_table, cfg, false);
  std::optional<GroupedOutcomes> training;
  if (cfg.group_quantile) training = detail::load_training(cfg);

  std::optional<std::vector<std::string>> ids;
  if (cfg.id) {
    const auto col = test_table.column(*cfg.id);
    ids.emplace();
    for (std::size_t r = 0; r < test_table.rows.size(); ++r) ids->push_back(test_table.text(r, col));
  }

  const auto report = select(data, rule, spec, method, cfg.q, cfg.seed, training ? &*training : nullptr);
  Json doc = io::selection_json(report, cfg.to_json(), ids ? &*ids : nullptr);
  io::write_file_atomic(cfg.out, doc.dump(2) + "\n");

  out << "selected " << report.result.k_star << " of " << report.units.size() << " test units (k*="
      << report.result.k_star << ", tau_hat=" << io::format_real(report.result.tau_hat) << ", q="
      << io::format_real(cfg.q) << ", method=" << cfg.method << ", score=" << report.score << ")\n";
  for (const auto& w : report.warnings) out << "warning: " << w << '\n';
  out << "report written to " << cfg.out << '\n';
  return doc;
}

// -------------------------------------------------------------- simulate

struct SimulateConfig {
  std::vector<int> settings = {1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<double> sigmas = {1.0};
  std::vector<double> qs = {0.1};
  std::vector<std::string> scores = {"res", "clip", "sub"};
  std::size_t n_train = 200;
  std::size_t n = 200;
  std::size_t m = 200;
  std::size_t reps = 500;
  std::optional<std::uint64_t> seed;
  std::string predictor = "oracle";
  std::size_t knn_k = 20;
  double clip_constant = kDefaultClipConstant;
  std::string noise_reading = "as-written";
  bool exchangeable = false;
  std::size_t population = 2000;
  std::string out_csv;
  std::optional<std::string> out_json;
  std::optional<std::string> plot_data;

  Json to_json() const {
    return Json{{"settings", settings},
                {"sigmas", sigmas},
                {"qs", qs},
                {"scores", scores},
                {"n_train", n_train},
                {"n", n},
                {"m", m},
                {"N", reps},
                {"seed", seed ? Json(*seed) : Json(nullptr)},
                {"predictor", predictor},
                {"knn_k", knn_k},
                {"clip_M", clip_constant},
                {"noise_reading", noise_reading},
                {"exchangeable", exchangeable},
                {"population", population}};
  }
};

inline std::vector<sim::McRow> run_simulate(const SimulateConfig& cfg, std::ostream& progress) {
  for (int s : cfg.settings) {
    if (s < 1 || s > 8) throw ContractError("setting must be in 1..8, got " + std::to_string(s));
  }
  for (double sg : cfg.sigmas) {
    if (!(sg > 0.0) || !std::isfinite(sg)) throw ContractError("sigma must be positive");
  }
  for (double q : cfg.qs) {
    if (!(q > 0.0 && q < 1.0)) throw ContractError("q must be in (0,1)");
  }
  if (!cfg.seed) throw ContractError("--seed is required");
  if (cfg.settings.empty() || cfg.sigmas.empty() || cfg.qs.empty()) throw ContractError("empty simulation grid");
  sim::NoiseReading reading;
  if (cfg.noise_reading == "as-written") {
    reading = sim::NoiseReading::as_written;
  } else if (cfg.noise_reading == "sd") {
    reading = sim::NoiseReading::all_standard_deviation;
  } else {
    throw ContractError("noise reading must be as-written or sd");
  }
  sim::Predictor predictor;
  if (cfg.predictor == "oracle") {
    predictor = sim::Predictor::oracle();
  } else if (cfg.predictor == "knn") {
    predictor = sim::Predictor::knn(cfg.knn_k);
  } else {
    throw ContractError("predictor must be oracle or knn");
  }
  std::vector<sim::ScoreConfig> scores;
  for (const auto& s : cfg.scores) scores.push_back(sim::parse_score_config(s));

  std::vector<sim::McRow> rows;
  std::size_t cell = 0;
  const std::size_t cells = cfg.settings.size() * cfg.sigmas.size() * cfg.qs.size();
  for (int setting : cfg.settings) {
    for (double sigma : cfg.sigmas) {
      for (double q : cfg.qs) {
        sim::McConfig mc;
        mc.dgp = sim::Dgp::table(setting, sigma, reading);
        mc.n_train = cfg.n_train;
        mc.n_calib = cfg.n;
        mc.n_test = cfg.m;
        mc.q = q;
        mc.clip_constant = cfg.clip_constant;
        mc.scores = scores;
        mc.predictor = predictor;
        mc.reps = cfg.reps;
        // one stream per grid cell, stable under grid reordering
        mc.seed = derive_seed(derive_seed(derive_seed(*cfg.seed, static_cast<std::uint64_t>(setting)),
                                          std::bit_cast<std::uint64_t>(sigma)),
                              std::bit_cast<std::uint64_t>(q));
        progress << "[" << ++cell << "/" << cells << "] setting " << setting << " sigma " << io::format_real(sigma)
                 << " q " << io::format_real(q) << '\n';
        const auto report = cfg.exchangeable ? sim::exchangeable_experiment(mc, cfg.population) : sim::monte_carlo(mc);
        rows.insert(rows.end(), report.rows.begin(), report.rows.end());
      }
    }
  }

  if (!cfg.out_csv.empty()) io::write_file_atomic(cfg.out_csv, io::mc_csv(rows));
  if (cfg.out_json) io::write_file_atomic(*cfg.out_json, io::mc_json(rows, cfg.to_json()).dump(2) + "\n");
  if (cfg.plot_data) io::write_file_atomic(*cfg.plot_data, io::mc_plot_csv(rows));
  return rows;
}

// ----------------------------------------------------------- asymptotics

struct AsymptoticsConfig {
  std::optional<std::string> generator;  // mixture | pure-null
  double alt_fraction = 0.5;
  std::optional<int> setting;
  double sigma = 1.0;
  std::optional<std::string> population;  // CSV path
  std::string pred = "prediction";
  std::string outcome = "outcome";
  double threshold = 0.0;
  std::size_t n_pop = 200000;
  std::string score = "clip";
  double clip_constant = kDefaultClipConstant;
  std::optional<double> q;
  std::optional<std::uint64_t> seed;
  double epsilon = 1e-3;
  double margin = 1e-6;
  std::optional<std::string> out;

  Json to_json() const {
    Json source;
    if (generator) {
      source = Json{{"generator", *generator}, {"alt_fraction", alt_fraction}, {"N", n_pop}};
    } else if (setting) {
      source = Json{{"setting", *setting}, {"sigma", sigma}, {"N", n_pop}};
    } else {
      source = Json{{"population", population.value_or("")}, {"pred", pred}, {"outcome", outcome}};
    }
    return Json{{"source", source},
                {"threshold", threshold},
                {"score", score},
                {"clip_M", clip_constant},
                {"q", q ? Json(*q) : Json(nullptr)},
                {"seed", seed ? Json(*seed) : Json(nullptr)},
                {"epsilon", epsilon},
                {"margin", margin}};
  }
};

inline Json run_asymptotics(const AsymptoticsConfig& cfg, std::ostream& out) {
  if (!cfg.q) throw ContractError("--q is required");
  if (!(*cfg.q > 0.0 && *cfg.q < 1.0)) throw ContractError("q must be in (0,1)");
  if (!cfg.seed) throw ContractError("--seed is required");
  const int sources = (cfg.generator ? 1 : 0) + (cfg.setting ? 1 : 0) + (cfg.population ? 1 : 0);
  if (sources != 1) throw ContractError("choose exactly one of --generator, --setting, --population");
  const auto rule = io::parse_score(cfg.score, cfg.clip_constant);
  if (cfg.n_pop == 0) throw ContractError("population size must be positive");

  const std::uint64_t data_seed = derive_seed(*cfg.seed, 1);
  PopulationRows rows;
  if (cfg.generator) {
    if (*cfg.generator == "mixture") {
      rows = mixture_population(cfg.n_pop, data_seed, cfg.alt_fraction);
    } else if (*cfg.generator == "pure-null") {
      rows = pure_null_population(cfg.n_pop, data_seed);
    } else {
      throw ContractError("generator must be mixture or pure-null");
    }
  } else if (cfg.setting) {
    if (*cfg.setting < 1 || *cfg.setting > 8) throw ContractError("setting must be in 1..8");
    const auto draw = sim::generate(sim::Dgp::table(*cfg.setting, cfg.sigma), cfg.n_pop, data_seed);
    for (const auto& r : draw) {
      rows.prediction.push_back(r.mu);
      rows.outcome.push_back(r.y);
    }
  } else {
    const auto t = io::read_csv(*cfg.population);
    const auto p = t.column(cfg.pred);
    const auto y = t.column(cfg.outcome);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      rows.prediction.push_back(t.real(r, p));
      rows.outcome.push_back(t.real(r, y));
    }
  }

  const auto pop = make_population(rows.prediction, rows.outcome, cfg.threshold, rule);
  const auto report = asymptotic_fdr_power(pop, *cfg.q, derive_seed(*cfg.seed, 2), {cfg.epsilon, cfg.margin});
  Json doc = io::asymptotic_json(report, cfg.to_json());
  if (cfg.out) io::write_file_atomic(*cfg.out, doc.dump(2) + "\n");
  out << "t*=" << io::format_real(report.t_star) << " fdr_limit=" << io::format_real(report.fdr_limit)
      << " power_limit=" << io::format_real(report.power_limit)
      << " condition=" << (report.condition_flag ? "true" : "false") << " N=" << report.n_pop << '\n';
  return doc;
}

// ------------------------------------------------------------------ main

/// Parses arguments and dispatches. Exit codes: 0 success, 2 validation,
/// 3 I/O.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Conformal selection with false discovery rate control"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  SelectConfig sel;
  auto* select_cmd = app.add_subcommand("select", "Select test units from calibration and test CSV files");
  select_cmd->add_option("--calib", sel.calib, "Calibration CSV")->required();
  select_cmd->add_option("--test", sel.test, "Test CSV")->required();
  select_cmd->add_option("--pred", sel.pred, "Prediction column")->required();
  select_cmd->add_option("--outcome", sel.outcome, "Outcome column")->capture_default_str();
  select_cmd->add_option("--group", sel.group, "Group column");
  select_cmd->add_option("--id", sel.id, "Test unit label column");
  auto* tcol = select_cmd->add_option("--threshold-col", sel.threshold_col, "Per-sample threshold column");
  auto* tconst = select_cmd->add_option("--threshold-const", sel.threshold_const, "Constant threshold");
  auto* tgq = select_cmd->add_option("--group-quantile", sel.group_quantile,
                                     "Threshold = lower empirical quantile of the group's training outcomes");
  tcol->excludes(tconst)->excludes(tgq);
  tconst->excludes(tgq);
  select_cmd->add_option("--train", sel.train, "Training CSV for --group-quantile");
  select_cmd->add_option("--train-outcome", sel.train_outcome, "Outcome column of the training CSV");
  select_cmd->add_flag("--threshold-from-calibration", sel.threshold_from_calibration,
                       "Declare that the constant threshold was derived from calibration data");
  select_cmd->add_option("--score", sel.score, "res | clip | clip-threshold")->capture_default_str();
  select_cmd->add_option("--clip-M", sel.clip_constant, "Clip constant M")->capture_default_str();
  select_cmd->add_option("--method", sel.method, "rand | dtm | sub")->capture_default_str();
  select_cmd->add_option("--q", sel.q, "Nominal FDR level in (0,1)")->required();
  select_cmd->add_option("--seed", sel.seed, "Seed for tie-breaking uniforms");
  select_cmd->add_option("--out", sel.out, "Report JSON path")->required();

  SimulateConfig simc;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo FDR / power study on the eight simulation settings");
  sim_cmd->add_option("--setting", simc.settings, "Settings (1..8), comma separated")->delimiter(',');
  sim_cmd->add_option("--sigma", simc.sigmas, "Noise levels, comma separated")->delimiter(',');
  sim_cmd->add_option("--q", simc.qs, "FDR levels, comma separated")->delimiter(',');
  sim_cmd->add_option("--scores", simc.scores, "Subset of res,clip,sub")->delimiter(',');
  sim_cmd->add_option("--n-train", simc.n_train, "Training size (k-NN only)")->capture_default_str();
  sim_cmd->add_option("--n", simc.n, "Calibration size")->capture_default_str();
  sim_cmd->add_option("--m", simc.m, "Test size")->capture_default_str();
  sim_cmd->add_option("--reps,-N", simc.reps, "Repetitions")->capture_default_str();
  sim_cmd->add_option("--seed", simc.seed, "Master seed")->required();
  sim_cmd->add_option("--predictor", simc.predictor, "oracle | knn")->capture_default_str();
  sim_cmd->add_option("--knn-k", simc.knn_k, "Neighbours for the k-NN predictor")->capture_default_str();
  sim_cmd->add_option("--clip-M", simc.clip_constant, "Clip constant M")->capture_default_str();
  sim_cmd->add_option("--noise-reading", simc.noise_reading, "as-written | sd")->capture_default_str();
  sim_cmd->add_flag("--exchangeable", simc.exchangeable,
                    "Finite-population sampling without replacement with deterministic p-values");
  sim_cmd->add_option("--population", simc.population, "Population size for --exchangeable")->capture_default_str();
  sim_cmd->add_option("--out-csv", simc.out_csv, "Summary CSV path")->required();
  sim_cmd->add_option("--out-json", simc.out_json, "Summary JSON path");
  sim_cmd->add_option("--emit-plot-data", simc.plot_data, "Long-format CSV for plotting");

  AsymptoticsConfig asy;
  auto* asy_cmd = app.add_subcommand("asymptotics", "Large-sample threshold, FDR and power on a population sample");
  asy_cmd->add_option("--generator", asy.generator, "mixture | pure-null");
  asy_cmd->add_option("--alt-fraction", asy.alt_fraction, "Share of positive units in the mixture")->capture_default_str();
  asy_cmd->add_option("--setting", asy.setting, "Draw the population from setting 1..8 with oracle predictions");
  asy_cmd->add_option("--sigma", asy.sigma, "Noise level for --setting")->capture_default_str();
  asy_cmd->add_option("--population", asy.population, "Population CSV with prediction and outcome columns");
  asy_cmd->add_option("--pred", asy.pred, "Prediction column")->capture_default_str();
  asy_cmd->add_option("--outcome", asy.outcome, "Outcome column")->capture_default_str();
  asy_cmd->add_option("--threshold-const", asy.threshold, "Threshold c")->capture_default_str();
  asy_cmd->add_option("--N", asy.n_pop, "Population size for generated populations")->capture_default_str();
  asy_cmd->add_option("--score", asy.score, "res | clip | clip-threshold")->capture_default_str();
  asy_cmd->add_option("--clip-M", asy.clip_constant, "Clip constant M")->capture_default_str();
  asy_cmd->add_option("--q", asy.q, "Nominal FDR level in (0,1)")->required();
  asy_cmd->add_option("--seed", asy.seed, "Seed")->required();
  asy_cmd->add_option("--epsilon", asy.epsilon, "Window for the technical condition")->capture_default_str();
  asy_cmd->add_option("--margin", asy.margin, "Strictness margin for the technical condition")->capture_default_str();
  asy_cmd->add_option("--out", asy.out, "Report JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (*select_cmd) {
      run_select(sel, out);
    } else if (*sim_cmd) {
      const auto rows = run_simulate(simc, err);
      out << "wrote " << rows.size() << " rows to " << simc.out_csv << '\n';
    } else {
      run_asymptotics(asy, out);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace confsel::cli
