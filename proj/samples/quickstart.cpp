// Screen a simulated test set with the three score configurations and
// compare each selection against the (here known) outcomes.

#include <cstdio>

#include "confsel/confsel.hpp"

int main() {
  using namespace confsel;

  const auto dgp = sim::Dgp::table(2, 1.0);
  Rng rng(2024);
  Dataset data;
  for (const auto& r : sim::generate(dgp, 500, rng)) data.calibration.push_back({r.mu, r.y, {}, {}});
  for (const auto& r : sim::generate(dgp, 100, rng)) data.test.push_back({r.mu, r.y, {}, {}});

  const auto threshold = ThresholdSpec::constant(0.0);
  struct Config {
    const char* label;
    ScoreRule rule;
    SelectionMethod method;
  };
  const Config configs[] = {
      {"res ", ScoreRule::residual(), SelectionMethod::randomized},
      {"clip", ScoreRule::clipped(100.0), SelectionMethod::randomized},
      {"sub ", ScoreRule::clipped(100.0), SelectionMethod::same_class},
  };
  for (const auto& c : configs) {
    const auto report = select(data, c.rule, threshold, c.method, 0.1, std::optional<std::uint64_t>{7});
    std::printf("%s  selected %3zu of %zu  tau_hat %.4f  FDP %.3f  power %.3f\n", c.label, report.result.k_star,
                data.test.size(), report.result.tau_hat, report.metrics->fdp, report.metrics->power);
  }
}
