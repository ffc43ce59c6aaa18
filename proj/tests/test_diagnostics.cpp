#include <doctest.h>

#include <cmath>
#include <limits>

#include "bope/abstraction.hpp"
#include "bope/coverage.hpp"
#include "bope/experiment.hpp"
#include "bope/generators.hpp"
#include "bope/lemmas.hpp"

using namespace bope;

namespace {

OccupancyTable table(std::initializer_list<std::pair<OccupancyTable::Key, double>> entries) {
  OccupancyTable t;
  for (const auto& [k, w] : entries) t.weights[k] = w;
  return t;
}

}  // namespace

TEST_CASE("coverage ratios on hand tables") {
  const OccupancyTable a = table({{{0, 0, 0}, 0.25}, {{1, 0, 1}, 0.75}});
  CHECK(coverage_linf(a, a) == doctest::Approx(1.0));
  CHECK(coverage_chi2(a, a) == doctest::Approx(1.0));
  CHECK(chi2_divergence(a, a) == doctest::Approx(0.0));

  const OccupancyTable b = table({{{0, 0, 0}, 0.5}, {{1, 0, 1}, 0.5}});
  CHECK(coverage_linf(a, b) == doctest::Approx(1.5));
  CHECK(coverage_chi2(a, b) == doctest::Approx(0.0625 / 0.5 + 0.5625 / 0.5));
  CHECK(coverage_chi2(a, b) - 1 == doctest::Approx(chi2_divergence(a, b)));

  const OccupancyTable c = table({{{0, 0, 0}, 1.0}});
  std::vector<std::string> notes;
  CHECK(coverage_linf(a, c, &notes) == std::numeric_limits<double>::infinity());
  CHECK(!notes.empty());
  CHECK_THROWS_AS(coverage_chi2(a, c), SupportViolation);
  CHECK(coverage_linf(c, a) == doctest::Approx(4.0));
}

TEST_CASE("coarse aggregation keeps mass and never raises the ratio") {
  const POMDP m = random_dense(ModelShape{2, 2, 2, 0.9, std::nullopt, 1.0}, 41);
  const BeliefGraph g = enumerate_reachable(m, 3);
  const AbstractionMap phi = build_truncation(g, 1);
  const OccupancyTable de = occupancy(m, g, random_memoryless(2, 2, 42, 0.1), true);
  const OccupancyTable db = occupancy(m, g, random_memoryless(2, 2, 43, 0.1), true);
  const OccupancyTable ce = aggregate_coarse(de, phi), cb = aggregate_coarse(db, phi);
  CHECK(ce.total() == doctest::Approx(de.total()).epsilon(1e-12));
  for (const auto& [k, w] : ce.weights) CHECK(phi.rep_node(std::get<0>(k)) == std::get<0>(k));
  CHECK(coverage_linf(ce, cb) <= coverage_linf(de, db) * (1 + 1e-12));
  CHECK(coverage_chi2(ce, cb) <= coverage_chi2(de, db) * (1 + 1e-12));
}

TEST_CASE("coverage comparison edge cases") {
  const POMDP m = revealing(ModelShape{2, 2, 0, 0.9, std::nullopt, 1.0}, 1, 44);
  const Policy pi_b = random_history_policy(m, 3, 45, 0.1);
  const CoverageReport same = compare_coverage(m, pi_b, pi_b, 3, 3);
  CHECK(same.theorem_regime);
  CHECK(same.linf_fine == doctest::Approx(1.0));
  CHECK(same.linf_coarse == doctest::Approx(1.0));

  const Policy pi_e = random_history_policy(m, 3, 46, 0.02);
  const CoverageReport full = compare_coverage(m, pi_b, pi_e, 3, 3);
  CHECK(full.linf_coarse == doctest::Approx(full.linf_fine).epsilon(1e-12));
  CHECK(full.chi2_coarse == doctest::Approx(full.chi2_fine).epsilon(1e-12));
  const CoverageReport one = compare_coverage(m, pi_b, pi_e, 1, 3);
  CHECK(one.coarse_le_fine);
  CHECK(one.to_json().contains("linf_coarse"));
}

TEST_CASE("every registered lemma passes a short run") {
  LemmaOptions opt;
  opt.trials = 40;
  opt.seed = 3;
  opt.max_states = 3;
  opt.max_obs = 3;
  opt.max_actions = 3;
  opt.pairs = 20;
  opt.vi_depth = 15;
  opt.vi_models = 3;
  for (const auto& id : registered_lemmas()) {
    const LemmaVerdict v = verify_lemma(id, opt);
    CAPTURE(id);
    CHECK(v.pass);
    CHECK(v.max_violation <= v.tolerance);
  }
  CHECK_THROWS_AS(verify_lemma("no-such-lemma"), UnknownLemma);
}

TEST_CASE("lemma verdicts are reproducible") {
  LemmaOptions opt;
  opt.trials = 30;
  opt.seed = 9;
  const LemmaVerdict a = verify_lemma("expected-contraction", opt), b = verify_lemma("expected-contraction", opt);
  CHECK(a.worst_ratio == b.worst_ratio);
  CHECK(a.to_json().dump() == b.to_json().dump());
}

TEST_CASE("linear fit recovers an exact line") {
  const LinearFit f = linear_fit({1, 2, 3, 4}, {3, 5, 7, 9});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK(linear_fit({1, 2, 3}, {1, 3, 2}).r2 < 1.0);
}

TEST_CASE("cover growth and forgetting sweeps") {
  const POMDP m = low_rank(ModelShape{4, 2, 2, 0.9, std::nullopt, 1.0}, 2, 79);
  const auto rows = cover_growth_sweep(m, {1, 2, 3}, 0.1);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) CHECK(std::size_t(r.cover) <= r.nodes);
  CHECK(rows[1].nodes > rows[0].nodes);

  const POMDP f = fast_forgetting(ModelShape{3, 1, 2, 0.9, std::nullopt, 1.0}, 0.3, 83);
  const auto fr = forgetting_sweep(f, 8, {0.1, 0.01});
  REQUIRE(fr.size() == 2);
  CHECK(fr[1].T0 >= fr[0].T0);
}
