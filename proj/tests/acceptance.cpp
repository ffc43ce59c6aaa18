// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bope/coverage.hpp"
#include "bope/experiment.hpp"
#include "bope/generators.hpp"
#include "bope/lemmas.hpp"
#include "bope/oracles.hpp"
#include "bope/short_memory.hpp"

using namespace bope;

namespace {

// tolerances and budgets
constexpr double kBeliefTol = 1e-10;
constexpr double kBeliefSeconds = 30;
constexpr double kLemmaTol = 1e-9;
constexpr double kCounterTol = 1e-12;
constexpr double kTelescopeTol = 1e-9;
constexpr double kPopulationDelta = 0.01;
constexpr double kZeroTol = 1e-12;
constexpr double kDsSeconds = 300;
constexpr double kInnerMaxTol = 1e-8;
constexpr double kFdvfShrink = 2.0;
constexpr double kRealizeTol = 1e-9;
constexpr double kCoverageSeconds = 120;
constexpr double kCoverageRel = 1e-12;
constexpr double kIsoTol = 1e-9;
constexpr double kCoverRateRatio = 0.5;
constexpr double kNodeRateRel = 0.1;
constexpr double kForgetR2 = 0.9;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double x) {
  std::ostringstream s;
  s.precision(4);
  s << x;
  return s.str();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

// Posterior of the last latent state by summing over every state path. Predict-first emits o_{k+1}
// from s_{k+1}; update-first emits it from s_k before the transition.
Eigen::VectorXd path_posterior(const POMDP& m, const History& tau, UpdateOrder order) {
  const int h = tau.h();
  std::vector<int> obs, acts;
  for (std::size_t i = 0; i < tau.seq.size(); ++i) (i % 2 ? acts : obs).push_back(tau.seq[i]);
  Eigen::VectorXd post = Eigen::VectorXd::Zero(m.n_states);
  std::vector<int> path(h, 0);
  const long total = long(std::pow(m.n_states, h));
  for (long code = 0; code < total; ++code) {
    long c = code;
    for (int k = 0; k < h; ++k) {
      path[k] = int(c % m.n_states);
      c /= m.n_states;
    }
    double w = m.d0(path[0]) * m.emission(path[0], obs[0]);
    for (int k = 0; k + 1 < h && w > 0; ++k) {
      const int emitter = order == UpdateOrder::PredictFirst ? path[k + 1] : path[k];
      w *= m.transition[acts[k]](path[k], path[k + 1]) * m.emission(emitter, obs[k + 1]);
    }
    post(path[h - 1]) += w;
  }
  return post / post.sum();
}

Outcome c1_belief_filter() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> sz(2, 4), na(1, 4);
  double worst = 0;
  std::size_t checked = 0;
  for (int i = 0; i < 50; ++i) {
    const ModelShape sh{sz(rng), na(rng), sz(rng), 0.9, std::nullopt, 1.0};
    POMDP m = random_dense(sh, rng(), 1.0);
    const BeliefGraph g = enumerate_reachable(m, 4);
    for (int n = 0; n < g.size(); ++n) {
      const History tau = g.history(n);
      worst = std::max(worst, (g.belief(n) - path_posterior(m, tau, UpdateOrder::PredictFirst)).cwiseAbs().maxCoeff());
      worst = std::max(worst, (belief_of_history(m, tau, UpdateOrder::UpdateFirst) -
                               path_posterior(m, tau, UpdateOrder::UpdateFirst))
                                  .cwiseAbs()
                                  .maxCoeff());
      ++checked;
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= kBeliefTol && secs < kBeliefSeconds,
          std::to_string(checked) + " histories, max err " + num(worst) + ", " + num(secs) + "s"};
}

Outcome c2_lemma1() {
  LemmaOptions o;
  o.trials = 1000;
  o.tol = kLemmaTol;
  const LemmaVerdict two = verify_lemma("expected-contraction", o);
  const LemmaVerdict one = verify_lemma("one-hot-contraction", o);
  const bool ok = two.pass && one.pass && two.trials >= 1000 && two.max_violation <= kLemmaTol &&
                  one.max_violation <= kLemmaTol;
  return {ok, "factor-2: " + std::to_string(two.trials) + " checks, worst ratio " + num(two.worst_ratio) +
                  "; one-hot factor-1: " + std::to_string(one.trials) + " checks, worst ratio " +
                  num(one.worst_ratio)};
}

Outcome c3_counter_example() {
  const CounterExampleResult r = counter_example_ratio(0.05);
  const double e_ratio = std::abs(r.ratio - 5.0);
  const double e1 = (r.next1 - Eigen::Vector2d(0.0, 1.0)).cwiseAbs().maxCoeff();
  const double e2 = (r.next2 - Eigen::Vector2d(0.5, 0.5)).cwiseAbs().maxCoeff();
  return {e_ratio <= kCounterTol && e1 <= kCounterTol && e2 <= kCounterTol,
          "ratio " + num(r.ratio) + " (err " + num(e_ratio) + "), outputs err " + num(std::max(e1, e2))};
}

Outcome c4_optimal_value() {
  LemmaOptions o;
  o.vi_models = 20;
  o.gamma = 0.8;
  o.vi_depth = 30;
  o.pairs = 200;
  o.max_states = o.max_obs = o.max_actions = 3;
  o.tol = kLemmaTol;
  const auto t0 = Clock::now();
  const LemmaVerdict v = verify_lemma("optimal-value-lipschitz", o);
  return {v.pass && v.max_violation <= kLemmaTol,
          "20 models x 200 pairs, worst ratio " + num(v.worst_ratio) + " vs 1/(1-g)=" + num(1 / (1 - 0.8)) +
              ", violation " + num(v.max_violation) + ", " + num(seconds_since(t0)) + "s"};
}

Outcome c5_telescoping() {
  LemmaOptions o;
  o.trials = 20;
  o.tol = kTelescopeTol;
  const LemmaVerdict v = verify_lemma("telescoping", o);
  return {v.pass && v.max_violation <= kTelescopeTol, "max |lhs - rhs| " + num(v.max_violation)};
}

struct DsSetup {
  POMDP m;
  Policy pi_e, pi_b;
  PrefixDist prefix = PrefixDist::geometric(0.9, 4);
};

DsSetup ds_setup() {
  DsSetup s;
  s.m = reset_dynamics(ModelShape{2, 2, 2, 0.9, std::nullopt, 1.0}, 7);
  s.pi_e = random_belief_linear(2, 2, 11, 1.0);
  s.pi_b = random_memoryless(2, 2, 13, 0.2);
  return s;
}

Outcome c6_population_identity() {
  const DsSetup s = ds_setup();
  const DsFixture fx = build_ds_fixture(s.m, s.pi_e, s.pi_b, s.prefix, 1e-9);
  const double R = s.m.rmax, g = s.m.gamma;
  FunctionTable exact = FunctionTable::table(DomainKind::AbstractStateAction, fx.Q_phi, R / (1 - g));
  const FunctionClass F = perturbation_class(exact, {0.3, 0.15, -0.2, 0.1}, 17, 0.0, R / (1 - g));
  const std::size_t n = 100000;
  const D1Dataset d = gen_d1(s.m, s.pi_b, n, s.prefix, D1Mode::IndependentRedraw, 19, 1);
  const DsContext ctx{&s.m, &fx.graph, &s.pi_e, &fx.phi};
  const double band = hoeffding_band(R, g, double(n), kPopulationDelta);
  bool ok = fx.phi.radius_eps <= 1e-9;
  double worst = 0;
  std::ostringstream det;
  for (std::size_t k = 0; k < F.size(); ++k) {
    const double emp = ds_loss(F.members[k], d, EstimationMode::Abstract, ctx);
    const double pop = ds_population_loss(F.members[k].values, fx.amdp.mdp, fx.pi_phi, fx.dD);
    worst = std::max(worst, std::abs(emp - pop));
    ok = ok && std::abs(emp - pop) <= band;
    if (k == 0) {
      ok = ok && std::abs(pop) <= kZeroTol;
      det << "f=Q: pop " << num(pop) << " emp " << num(emp) << "; ";
    }
  }
  det << F.size() << " functions, max |emp-pop| " << num(worst) << " within band " << num(band);
  return {ok, det.str()};
}

Outcome c7_ds_consistency() {
  const auto t0 = Clock::now();
  const DsSetup s = ds_setup();
  ExperimentConfig c;
  c.model = s.m;
  c.pi_e = s.pi_e;
  c.pi_b = s.pi_b;
  c.prefix = s.prefix;
  c.n_grid = {1000, 10000, 100000};
  c.seeds = 20;
  c.delta = 0.1;
  c.master_seed = 23;
  const ExperimentResult r = bound_vs_error_experiment(c);
  const double secs = seconds_since(t0);
  bool finite_cpi = true;
  double min_slack = std::numeric_limits<double>::infinity();
  for (const auto& row : r.rows) {
    finite_cpi = finite_cpi && std::isfinite(row.C_pi);
    min_slack = std::min(min_slack, row.bound - row.error);
  }
  std::ostringstream det;
  det << "|F|=" << 1 + c.class_shifts.size() << ", medians";
  for (double e : r.median_error) det << ' ' << num(e);
  det << ", violations " << r.bound_violations << "/" << r.rows.size() << ", min bound-error " << num(min_slack)
      << ", " << num(secs) << "s";
  return {r.medians_non_increasing && r.bound_violations == 0 && finite_cpi &&
              c.class_shifts.size() + 1 == 8 && secs < kDsSeconds,
          det.str()};
}

Outcome c8_inner_max() {
  POMDP m = random_dense(ModelShape{2, 2, 2, 1.0, 2, 1.0}, 29, 1.0);
  const Policy pi_e = random_memoryless(2, 2, 31, 0.1), pi_b = random_memoryless(2, 2, 37, 0.1);
  const MuSpec mu{&m, &pi_e, &pi_b};
  const FdvfDomain vd(2, 2, 2, 1), td(2, 2, 2, 1);
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0;
  for (int k = 0; k < 8; ++k) {
    Eigen::VectorXd vals(vd.v_size());
    for (Eigen::Index i = 0; i < vals.size(); ++i) vals(i) = u(rng);
    const FunctionTable V = fdvf_v_table(vd, vals);
    const std::vector<ResidualEntry> res = bellman_residual_H(m, pi_e, pi_b, V);
    const double route_a = fdvf_population_max(V, td, mu, 2);
    const double route_b = half_mean_square(res);
    const double at_residual = fdvf_population_inner(V, residual_theta_table(res, td), mu, 2);
    worst = std::max({worst, std::abs(route_a - route_b), std::abs(at_residual - route_b)});
  }
  return {worst <= kInnerMaxTol, "8 members, max gap " + num(worst)};
}

Outcome c9_fdvf_consistency() {
  FdvfExperimentConfig c;
  c.model = reset_dynamics(ModelShape{2, 2, 2, 1.0, 3, 1.0}, 43);
  c.pi_b = random_memoryless(2, 2, 47, 0.2);
  c.pi_e = random_truncated_policy(c.model, 2, 53, 0.05);
  c.window = 1;
  c.n_grid = {1000, 10000, 100000};
  c.seeds = 20;
  c.master_seed = 59;
  c.truncation_T = 3;
  const FdvfExperimentResult full = fdvf_experiment(c);
  FdvfExperimentConfig t = c;
  t.n_grid = {1000, 10000};
  t.truncation_T = 2;
  const FdvfExperimentResult trunc = fdvf_experiment(t);
  std::size_t identical = 0, compared = 0;
  for (const auto& rt : trunc.rows)
    for (const auto& rf : full.rows)
      if (rf.n == rt.n && rf.seed == rt.seed) {
        ++compared;
        if (rf.J_hat == rt.J_hat && rf.chosen == rt.chosen && rf.losses == rt.losses) ++identical;
      }
  const double J_check = exact_value(c.model, c.pi_e, 3).J;
  const double shrink = full.median_error.front() / std::max(full.median_error.back(), 1e-300);
  std::ostringstream det;
  det << "residual " << num(full.solve_residual) << ", completeness gap " << num(full.completeness_gap)
      << ", J " << num(full.J_true) << " (oracle " << num(J_check) << "), medians";
  for (double e : full.median_error) det << ' ' << num(e);
  det << ", shrink " << num(shrink) << "x, T=2 vs T=3 identical " << identical << "/" << compared;
  const bool ok = full.solve_residual <= kRealizeTol && full.completeness_gap <= kRealizeTol &&
                  std::abs(full.J_true - J_check) <= kRealizeTol && shrink >= kFdvfShrink && compared > 0 &&
                  identical == compared;
  return {ok, det.str()};
}

Outcome c10_coverage() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(61);
  std::uniform_int_distribution<int> ns(2, 3), ops(1, 2);
  int good = 0, total = 0, regime = 0;
  for (int i = 0; i < 100; ++i) {
    const POMDP m = revealing(ModelShape{ns(rng), 2, 2, 0.9, std::nullopt, 1.0}, ops(rng), rng());
    const Policy pi_b = random_history_policy(m, 4, rng(), 0.1);
    const Policy pi_e = random_history_policy(m, 4, rng(), 0.02);
    bool all = true;
    for (int T : {1, 2, 3}) {
      const CoverageReport r = compare_coverage(m, pi_b, pi_e, T, 4);
      regime += r.theorem_regime;
      all = all && r.linf_coarse <= r.linf_fine * (1 + kCoverageRel) + kCoverageRel &&
            r.chi2_coarse <= r.chi2_fine * (1 + kCoverageRel) + kCoverageRel;
    }
    good += all;
    ++total;
  }
  const double secs = seconds_since(t0);
  return {good == total && regime == 3 * total && secs < kCoverageSeconds,
          std::to_string(good) + "/" + std::to_string(total) + " instances, one-hot " + std::to_string(regime) +
              "/" + std::to_string(3 * total) + ", " + num(secs) + "s"};
}

Outcome c11_abstraction_error() {
  int violations = 0, checks = 0;
  double worst_frac = 0;
  for (int k = 0; k < 4; ++k) {
    const POMDP m = random_dense(ModelShape{2 + k % 2, 2, 2, 0.9, std::nullopt, 1.0}, 67 + k, 1.0);
    std::mt19937_64 rng(71 + k);
    const Eigen::VectorXd act = sample_dirichlet(rng, m.n_actions, 1.0);
    // |⟨b₁−b₂, V_s⟩| ≤ ½·span(V_s)·‖b₁−b₂‖₁ ≤ Rmax/(2(1−γ))·‖b₁−b₂‖₁
    const double L_V = m.rmax / (2 * (1 - m.gamma));
    for (double eps : {0.05, 0.1, 0.2}) {
      const AbstractionErrorCheck r = abstraction_error_check(m, act, eps, 3, L_V);
      ++checks;
      violations += !r.pass;
      worst_frac = std::max(worst_frac, r.measured / r.bound);
    }
  }
  return {violations == 0, std::to_string(checks) + " checks, " + std::to_string(violations) +
                               " violations, max measured/bound " + num(worst_frac)};
}

Outcome c12_short_memory() {
  std::mt19937_64 rng(73);
  std::uniform_int_distribution<int> ns(2, 3), no(2, 3), na(1, 2);
  int ok = 0, total = 0;
  double worst = 0;
  for (int i = 0; i < 10; ++i) {
    const POMDP m = random_dense(ModelShape{ns(rng), na(rng), no(rng), 0.9, std::nullopt, 1.0}, rng(), 1.0);
    for (int T : {1, 2}) {
      const IsomorphismReport r = check_short_memory_isomorphism(m, T, 4);
      worst = std::max({worst, r.max_reward_gap, r.max_transition_gap});
      ok += r.bijection && r.max_reward_gap <= kIsoTol && r.max_transition_gap <= kIsoTol;
      ++total;
    }
  }
  return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " isomorphisms, max gap " + num(worst)};
}

Outcome c13_sweeps() {
  const POMDP lr = low_rank(ModelShape{4, 2, 2, 0.9, std::nullopt, 1.0}, 2, 79);
  const auto rows = cover_growth_sweep(lr, {2, 3, 4, 5, 6, 7}, 0.1);
  std::vector<double> d, ln_nodes, ln_cover;
  for (const auto& r : rows) {
    d.push_back(r.depth);
    ln_nodes.push_back(std::log(double(r.nodes)));
    ln_cover.push_back(std::log(double(r.cover)));
  }
  const LinearFit fn = linear_fit(d, ln_nodes), fc = linear_fit(d, ln_cover);
  const double expected = std::log(double(lr.n_obs * lr.n_actions));
  const bool low_rank_ok =
      fc.slope < kCoverRateRatio * fn.slope && std::abs(fn.slope - expected) <= kNodeRateRel * expected;

  const POMDP ff = fast_forgetting(ModelShape{3, 1, 2, 0.9, std::nullopt, 1.0}, 0.3, 83);
  const std::vector<double> grid{1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4};
  const auto fr = forgetting_sweep(ff, 12, grid);
  std::vector<double> x, y;
  bool reached = true;
  for (const auto& r : fr) {
    reached = reached && r.T0 > 0;
    x.push_back(std::log(1 / r.eps));
    y.push_back(r.T0);
  }
  const LinearFit ft = linear_fit(x, y);
  const bool forget_ok = reached && ft.r2 >= kForgetR2 && ft.slope > 0;
  std::ostringstream det;
  det << "low-rank: node rate " << num(fn.slope) << " (log|O||A|=" << num(expected) << "), cover rate "
      << num(fc.slope) << ", covers";
  for (const auto& r : rows) det << ' ' << r.cover;
  det << "; forgetting: T0";
  for (const auto& r : fr) det << ' ' << r.T0;
  det << ", slope " << num(ft.slope) << ", R2 " << num(ft.r2);
  return {low_rank_ok && forget_ok, det.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"C1 belief filter vs path enumeration", c1_belief_filter},
      {"C2 expected update contraction", c2_lemma1},
      {"C3 counter-example ratio", c3_counter_example},
      {"C4 optimal value Lipschitz", c4_optimal_value},
      {"C5 telescoping identity", c5_telescoping},
      {"C6 double-sampling population identity", c6_population_identity},
      {"C7 double-sampling consistency and bound", c7_ds_consistency},
      {"C8 FDVF inner maximum", c8_inner_max},
      {"C9 FDVF consistency and truncation", c9_fdvf_consistency},
      {"C10 coarse vs fine coverage", c10_coverage},
      {"C11 abstraction error bound", c11_abstraction_error},
      {"C12 short-memory isomorphism", c12_short_memory},
      {"C13 covering and forgetting sweeps", c13_sweeps},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " | " << o.detail << " [" << num(seconds_since(t0))
              << "s]" << std::endl;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << (13 - failed) << "/13" << std::endl;
  return failed ? 1 : 0;
}
