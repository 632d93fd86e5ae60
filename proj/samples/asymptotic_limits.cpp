// Large-sample threshold and FDR / power limits of the residual and clipped
// scores on one population drawn from a simulation setting.

#include <cstdio>
#include <vector>

#include "confsel/confsel.hpp"

int main() {
  using namespace confsel;

  const auto rows = sim::generate(sim::Dgp::table(6, 1.0), 200000, 99);
  std::vector<double> mu, y;
  for (const auto& r : rows) {
    mu.push_back(r.mu);
    y.push_back(r.y);
  }
  for (const auto& rule : {ScoreRule::residual(), ScoreRule::clipped(100.0)}) {
    const auto rep = asymptotic_fdr_power(make_population(mu, y, 0.0, rule), 0.1, 1);
    std::printf("%-4s  t* %.5f  FDR limit %.4f  power limit %.4f  condition %s\n", rule.name().c_str(), rep.t_star,
                rep.fdr_limit, rep.power_limit, rep.condition_flag ? "holds" : "fails");
  }
}
