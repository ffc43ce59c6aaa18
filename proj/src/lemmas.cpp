#include "bope/lemmas.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "bope/alpha_vi.hpp"
#include "bope/belief_graph.hpp"
#include "bope/generators.hpp"
#include "bope/mdp.hpp"
#include "bope/rng.hpp"

namespace bope {

nlohmann::json LemmaVerdict::to_json() const {
  return {{"lemma_id", lemma_id}, {"trials", trials},       {"worst_ratio", worst_ratio},
          {"max_violation", max_violation}, {"tolerance", tolerance}, {"pass", pass}, {"log", log}};
}

const std::vector<std::string>& registered_lemmas() {
  static const std::vector<std::string> ids{"expected-contraction", "one-hot-contraction", "obs-smoothness",
                                            "reward-smoothness",    "telescoping",          "optimal-value-lipschitz",
                                            "dpi-policy"};
  return ids;
}

double expected_update_distance(const POMDP& m, const Eigen::VectorXd& b1, const Eigen::VectorXd& b2, int a,
                                UpdateOrder order) {
  const Eigen::VectorXd p1 = obs_predictive(m, b1, a, order);
  double total = 0;
  for (int o = 0; o < m.n_obs; ++o) {
    if (p1(o) <= 0) continue;
    const Eigen::VectorXd n1 = belief_update(m, b1, a, o, order);
    const Eigen::VectorXd u2 = belief_update_unnormalized(m, b2, a, o, order);
    const double z = u2.sum();
    total += p1(o) * (z > 0 ? (n1 - u2 / z).lpNorm<1>() : 2.0);
  }
  return total;
}

CounterExampleResult counter_example_ratio(double xi) {
  const POMDP m = counter_example(xi);
  CounterExampleResult r;
  r.b1 = initial_belief(m, 1);
  r.b2 = initial_belief(m, 3);
  r.next1 = belief_update(m, r.b1, 0, 2);
  r.next2 = belief_update(m, r.b2, 0, 2);
  const double d = (r.b1 - r.b2).lpNorm<1>();
  r.ratio = (r.next1 - r.next2).lpNorm<1>() / d;
  r.expected_ratio = expected_update_distance(m, r.b1, r.b2, 0, m.order) / d;
  return r;
}

namespace {

struct Tracker {
  LemmaVerdict v;
  void record(double lhs, double rhs, double scale) {
    ++v.trials;
    v.max_violation = std::max(v.max_violation, lhs - rhs);
    if (scale > 0) v.worst_ratio = std::max(v.worst_ratio, lhs / scale);
  }
};

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(12);
  s << x;
  return s.str();
}

/// Belief with a random number of zeroed coordinates so that undefined updates also get probed.
Eigen::VectorXd random_belief(std::mt19937_64& rng, int S, bool sparse) {
  Eigen::VectorXd b = sample_dirichlet(rng, S, 1.0);
  if (sparse) {
    std::uniform_int_distribution<int> pick(0, S - 1);
    b(pick(rng)) = 0;
    if (b.sum() <= 0) b(0) = 1;
    b /= b.sum();
  }
  return b;
}

POMDP random_model(std::mt19937_64& rng, const LemmaOptions& opt, bool one_hot) {
  std::uniform_int_distribution<int> s(2, opt.max_states), o(2, opt.max_obs), a(1, opt.max_actions);
  ModelShape sh{s(rng), a(rng), o(rng), opt.gamma, std::nullopt, 1.0};
  const std::uint64_t seed = rng();
  return one_hot ? revealing(sh, 1 + int(seed % 2), seed) : random_dense(sh, seed, 0.7);
}

LemmaVerdict expected_contraction(const LemmaOptions& opt, bool one_hot) {
  Tracker t;
  auto rng = make_stream(opt.seed, named_stream(one_hot ? "one-hot-contraction" : "expected-contraction"));
  const double factor = one_hot ? 1.0 : 2.0;
  for (std::size_t i = 0; i < opt.trials; ++i) {
    const POMDP m = opt.model ? *opt.model : random_model(rng, opt, one_hot);
    Eigen::VectorXd b1, b2;
    if (one_hot) {
      std::uniform_int_distribution<int> pick(0, m.n_states - 1);
      b1 = Eigen::VectorXd::Unit(m.n_states, pick(rng));
      b2 = Eigen::VectorXd::Unit(m.n_states, pick(rng));
    } else {
      b1 = random_belief(rng, m.n_states, i % 4 == 3);
      b2 = random_belief(rng, m.n_states, i % 4 == 1);
    }
    const double d = (b1 - b2).lpNorm<1>();
    std::uniform_int_distribution<int> act(0, m.n_actions - 1);
    const int a = act(rng);
    for (UpdateOrder order : {UpdateOrder::PredictFirst, UpdateOrder::UpdateFirst}) {
      if (one_hot && order != m.order) continue;
      const double lhs = expected_update_distance(m, b1, b2, a, order);
      t.record(lhs, factor * d, d);
    }
  }
  if (!one_hot && !opt.model) {
    for (double xi : opt.xi_fixtures) {
      const CounterExampleResult r = counter_example_ratio(xi);
      const double d = (r.b1 - r.b2).lpNorm<1>();
      t.record(r.expected_ratio * d, factor * d, d);
      t.v.log.push_back("xi=" + fmt(xi) + " pointwise ratio " + fmt(r.ratio) + " (1/(4xi)=" + fmt(1 / (4 * xi)) +
                        "), expected ratio " + fmt(r.expected_ratio));
    }
  }
  return t.v;
}

LemmaVerdict obs_smoothness(const LemmaOptions& opt) {
  Tracker t;
  auto rng = make_stream(opt.seed, named_stream("obs-smoothness"));
  for (std::size_t i = 0; i < opt.trials; ++i) {
    const POMDP m = opt.model ? *opt.model : random_model(rng, opt, false);
    const Eigen::VectorXd b1 = random_belief(rng, m.n_states, i % 3 == 0);
    const Eigen::VectorXd b2 = random_belief(rng, m.n_states, i % 3 == 1);
    const double d = (b1 - b2).lpNorm<1>();
    for (int a = 0; a < m.n_actions; ++a)
      t.record((obs_predictive(m, b1, a) - obs_predictive(m, b2, a)).lpNorm<1>(), d, d);
  }
  return t.v;
}

LemmaVerdict reward_smoothness(const LemmaOptions& opt) {
  Tracker t;
  auto rng = make_stream(opt.seed, named_stream("reward-smoothness"));
  for (std::size_t i = 0; i < opt.trials; ++i) {
    const POMDP m = opt.model ? *opt.model : random_model(rng, opt, false);
    const Eigen::VectorXd b1 = random_belief(rng, m.n_states, i % 2 == 0);
    const Eigen::VectorXd b2 = random_belief(rng, m.n_states, false);
    const double d = (b1 - b2).lpNorm<1>();
    for (int a = 0; a < m.n_actions; ++a)
      t.record(std::abs(reward_of_belief(m, b1, a) - reward_of_belief(m, b2, a)), m.rmax * d, m.rmax * d);
  }
  return t.v;
}

LemmaVerdict telescoping(const LemmaOptions& opt) {
  Tracker t;
  auto rng = make_stream(opt.seed, named_stream("telescoping"));
  std::uniform_int_distribution<int> sz(2, 6), na(1, 4);
  std::uniform_real_distribution<double> g(0.3, 0.95);
  for (std::size_t i = 0; i < opt.trials; ++i) {
    const ExplicitMDP<double> M = random_explicit_mdp(sz(rng), na(rng), g(rng), rng());
    const Eigen::MatrixXd pi = random_policy_matrix(M.n_states, M.n_actions, rng());
    Eigen::MatrixXd Q(M.n_states, M.n_actions);
    std::uniform_real_distribution<double> u(0, 1 / (1 - M.gamma));
    for (Eigen::Index k = 0; k < Q.size(); ++k) Q.data()[k] = u(rng);
    const double J = M.d0.dot(evaluate_v(M, pi));
    const double lhs = j_of_q(M, pi, Q) - J;
    const double rhs = (occupancy(M, pi).cwiseProduct(Q - bellman(M, pi, Q))).sum() / (1 - M.gamma);
    const double err = std::abs(lhs - rhs);
    t.record(err, 0.0, 0.0);
  }
  return t.v;
}

LemmaVerdict optimal_value_lipschitz(const LemmaOptions& opt) {
  Tracker t;
  auto rng = make_stream(opt.seed, named_stream("optimal-value-lipschitz"));
  for (std::size_t i = 0; i < opt.vi_models; ++i) {
    POMDP m = opt.model ? *opt.model : random_model(rng, opt, false);
    m.gamma = opt.gamma;
    m.horizon.reset();
    const AlphaSet V = optimal_value_alpha(m, opt.vi_depth, 50000, 1e-6);
    const double L = m.rmax / (1 - m.gamma);
    const double slack = 2 * std::pow(m.gamma, opt.vi_depth) * m.rmax / (1 - m.gamma) + 2 * V.prune_error;
    const BeliefGraph g = enumerate_reachable(m, opt.pair_depth);
    std::uniform_int_distribution<int> pick(0, g.size() - 1);
    std::size_t done = 0;
    for (std::size_t tries = 0; done < opt.pairs && tries < 50 * opt.pairs; ++tries) {
      const int x = pick(rng), y = pick(rng);
      const Eigen::VectorXd b1 = g.belief(x), b2 = g.belief(y);
      const double d = (b1 - b2).lpNorm<1>();
      if (d <= 1e-12) continue;
      ++done;
      const double diff = std::abs(V.value(b1) - V.value(b2));
      // ratio form and additive form
      t.record(diff / d, L + slack, 1.0);
      t.v.max_violation = std::max(t.v.max_violation, diff - (L * d + slack));
    }
    t.v.log.push_back("model " + std::to_string(i) + ": " + std::to_string(V.size()) + " alpha vectors (prune error " + fmt(V.prune_error) + "), " +
                      std::to_string(done) + " pairs");
  }
  return t.v;
}

LemmaVerdict dpi_policy(const LemmaOptions& opt) {
  Tracker t;
  auto rng = make_stream(opt.seed, named_stream("dpi-policy"));
  for (std::size_t i = 0; i < opt.trials; ++i) {
    const POMDP m = opt.model ? *opt.model : random_model(rng, opt, false);
    const Policy pi = random_belief_linear(m.n_states, m.n_actions, rng(), 0.5);
    const Eigen::VectorXd b1 = random_belief(rng, m.n_states, false);
    const Eigen::VectorXd b2 = random_belief(rng, m.n_states, i % 2 == 0);
    const Eigen::VectorXd p1 = pi.probs(History(), b1), p2 = pi.probs(History(), b2);
    double lhs = 0;
    for (int a = 0; a < m.n_actions; ++a) {
      const Eigen::VectorXd po = obs_predictive(m, b1, a);
      lhs += (po * (p1(a) - p2(a))).lpNorm<1>();
    }
    const double d = (b1 - b2).lpNorm<1>();
    t.record(lhs, (p1 - p2).lpNorm<1>(), (p1 - p2).lpNorm<1>());
    t.v.max_violation = std::max(t.v.max_violation, lhs - *pi.declared_L_pi * d);
  }
  return t.v;
}

}  // namespace

LemmaVerdict verify_lemma(const std::string& id, const LemmaOptions& opt) {
  LemmaVerdict v;
  if (id == "expected-contraction") v = expected_contraction(opt, false);
  else if (id == "one-hot-contraction") v = expected_contraction(opt, true);
  else if (id == "obs-smoothness") v = obs_smoothness(opt);
  else if (id == "reward-smoothness") v = reward_smoothness(opt);
  else if (id == "telescoping") v = telescoping(opt);
  else if (id == "optimal-value-lipschitz") v = optimal_value_lipschitz(opt);
  else if (id == "dpi-policy") v = dpi_policy(opt);
  else throw UnknownLemma("unknown lemma id '" + id + "'");
  v.lemma_id = id;
  v.tolerance = opt.tol;
  v.pass = v.max_violation <= opt.tol;
  return v;
}

}  // namespace bope
