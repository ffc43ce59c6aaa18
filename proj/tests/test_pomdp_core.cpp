#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "bope/alpha_vi.hpp"
#include "bope/belief_graph.hpp"
#include "bope/generators.hpp"
#include "bope/json_io.hpp"
#include "bope/lemmas.hpp"
#include "bope/oracles.hpp"

using namespace bope;

namespace {

// Posterior of s_h from an explicit sum over state paths (predict-first timing).
Eigen::VectorXd enumerate_posterior(const POMDP& m, const History& tau) {
  std::vector<int> obs, acts;
  for (std::size_t i = 0; i < tau.seq.size(); ++i) (i % 2 ? acts : obs).push_back(tau.seq[i]);
  Eigen::VectorXd post = Eigen::VectorXd::Zero(m.n_states);
  std::function<void(int, int, double)> rec = [&](int k, int s, double w) {
    if (k + 1 == int(obs.size())) {
      post(s) += w;
      return;
    }
    for (int s2 = 0; s2 < m.n_states; ++s2)
      rec(k + 1, s2, w * m.transition[acts[k]](s, s2) * m.emission(s2, obs[k + 1]));
  };
  for (int s = 0; s < m.n_states; ++s) rec(0, s, m.d0(s) * m.emission(s, obs[0]));
  return post / post.sum();
}

double brute_optimal(const POMDP& m, const Eigen::VectorXd& b, int depth) {
  if (depth == 0) return 0;
  double best = -1e300;
  for (int a = 0; a < m.n_actions; ++a) {
    double q = reward_of_belief(m, b, a);
    const Eigen::VectorXd po = obs_predictive(m, b, a);
    for (int o = 0; o < m.n_obs; ++o)
      if (po(o) > 0) q += m.gamma * po(o) * brute_optimal(m, belief_update(m, b, a, o), depth - 1);
    best = std::max(best, q);
  }
  return best;
}

}  // namespace

TEST_CASE("belief filter matches path enumeration") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const POMDP m = random_dense(ModelShape{3, 2, 2, 0.9, std::nullopt, 1.0}, seed);
    const BeliefGraph g = enumerate_reachable(m, 3);
    CHECK(g.size() == 2 + 8 + 32);
    for (int n = 0; n < g.size(); ++n)
      CHECK((g.belief(n) - enumerate_posterior(m, g.history(n))).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("validate rejects malformed models") {
  POMDP m = random_dense(ModelShape{2, 2, 2, 0.9, std::nullopt, 1.0}, 3);
  POMDP bad = m;
  bad.transition[1](0, 0) += 0.1;
  CHECK_THROWS_AS(validate(bad), NonStochasticRow);
  bad = m;
  bad.gamma = 1.0;
  CHECK_THROWS_AS(validate(bad), BadDiscount);
  bad = m;
  bad.reward(0, 0) = 2.0;
  CHECK_THROWS_AS(validate(bad), RewardOutOfRange);
  bad = m;
  bad.emission.resize(2, 3);
  CHECK_THROWS_AS(validate(bad), BadSpec);
}

TEST_CASE("zero-probability observation") {
  const POMDP m = counter_example(0.05);
  const Eigen::Vector2d b(1.0, 0.0);
  CHECK(obs_predictive(m, b, 0)(1) == 0.0);
  CHECK_THROWS_AS(belief_update(m, b, 0, 1), UnreachableObservation);
}

TEST_CASE("model JSON round trip and generator determinism") {
  const POMDP m = random_dense(ModelShape{3, 2, 4, 0.8, std::nullopt, 2.0}, 9);
  const POMDP back = model_from_json(model_to_json(m));
  CHECK(model_hash(back) == model_hash(m));
  CHECK(model_to_json(back).dump() == model_to_json(m).dump());
  CHECK(model_hash(random_dense(ModelShape{3, 2, 4, 0.8, std::nullopt, 2.0}, 9)) == model_hash(m));
  CHECK(model_hash(random_dense(ModelShape{3, 2, 4, 0.8, std::nullopt, 2.0}, 10)) != model_hash(m));
  nlohmann::json j = model_to_json(m);
  j["emission"] = 3;
  CHECK_THROWS(model_from_json(j));
}

TEST_CASE("revealing generator gives one-hot beliefs") {
  const POMDP m = revealing(ModelShape{3, 2, 0, 0.9, std::nullopt, 1.0}, 2, 4);
  CHECK(m.n_obs == 6);
  const BeliefGraph g = enumerate_reachable(m, 3);
  for (int n = 0; n < g.size(); ++n) CHECK(g.belief(n).maxCoeff() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("exact value agrees with the closed form on a constant chain") {
  const POMDP m = constant_chain(0.5, 0.9);
  const double J = exact_value(m, Policy::uniform(1), 20).J;
  CHECK(J == doctest::Approx(0.5 * (1 - std::pow(0.9, 20)) / 0.1).epsilon(1e-12));
  CHECK(tail_bound(m, 20) == doctest::Approx(std::pow(0.9, 20) * 10).epsilon(1e-12));
}

TEST_CASE("exact value, window chain and Monte Carlo agree") {
  const POMDP m = random_dense(ModelShape{2, 2, 3, 0.8, std::nullopt, 1.0}, 12);
  const Policy pi = random_memoryless(3, 2, 13);
  const double J = exact_value(m, pi, 6).J;
  CHECK(window_chain_value(m, pi, 6) == doctest::Approx(J).epsilon(1e-10));
  const MonteCarloResult mc = monte_carlo_value(m, pi, 6, 40000, 14);
  CHECK(std::abs(mc.mean - J) < 4 * mc.stderr_ + 1e-12);
}

TEST_CASE("open-loop value is linear in the belief") {
  const POMDP m = random_dense(ModelShape{3, 2, 2, 0.7, std::nullopt, 1.0}, 15);
  const Eigen::Vector2d act(0.3, 0.7);
  const Eigen::VectorXd Vs = open_loop_state_values(m, act);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(3, 3);
  for (int a = 0; a < 2; ++a) P += act(a) * m.transition[a];
  const Eigen::VectorXd r = m.reward * act;
  // finite sum Σ_k γ^k d0ᵀPᵏr and the exact remainder γ^D d0ᵀPᴰV_s
  const int D = 8;
  Eigen::RowVectorXd d = m.d0.transpose();
  double J = 0, disc = 1;
  for (int k = 0; k < D; ++k, disc *= m.gamma, d = d * P) J += disc * d.dot(r);
  CHECK(exact_value(m, Policy::constant_dist(act), D).J == doctest::Approx(J).epsilon(1e-12));
  CHECK(m.d0.dot(Vs) == doctest::Approx(J + disc * d.dot(Vs)).epsilon(1e-12));
}

TEST_CASE("alpha-vector value iteration matches expectimax") {
  const POMDP m = random_dense(ModelShape{2, 2, 2, 0.8, std::nullopt, 1.0}, 21);
  const AlphaSet V = optimal_value_alpha(m, 4);
  CHECK(V.size() >= 1);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const Eigen::VectorXd b = sample_dirichlet(rng, 2, 1.0);
    CHECK(V.value(b) == doctest::Approx(brute_optimal(m, b, 4)).epsilon(1e-9));
  }
}

TEST_CASE("witness LP") {
  Eigen::VectorXd w;
  CHECK(witness_lp(Eigen::Vector2d(1, 0), {Eigen::Vector2d(0, 1)}, &w) == doctest::Approx(1.0));
  CHECK(w(0) == doctest::Approx(1.0));
  CHECK(witness_lp(Eigen::Vector2d(0, 0), {Eigen::Vector2d(1, 1)}) == doctest::Approx(-1.0));
  const auto kept = prune_alphas({Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), Eigen::Vector2d(0.4, 0.4),
                                  Eigen::Vector2d(0.6, 0.6)});
  CHECK(kept.size() == 3);
}

TEST_CASE("counter-example pointwise ratio") {
  for (double xi : {0.25, 0.1, 0.05, 0.01}) {
    const CounterExampleResult r = counter_example_ratio(xi);
    CHECK(r.ratio == doctest::Approx(1 / (4 * xi)).epsilon(1e-12));
    CHECK(r.next2(0) == doctest::Approx(0.5));
    CHECK(r.next1(1) == doctest::Approx(1.0));
    CHECK(r.expected_ratio <= 2.0);
  }
}

TEST_CASE("explicit MDP evaluation is a Bellman fixed point") {
  const ExplicitMDP<double> M = random_explicit_mdp(4, 3, 0.9, 3);
  const Eigen::MatrixXd pi = random_policy_matrix(4, 3, 4);
  const Eigen::MatrixXd Q = evaluate_q(M, pi);
  CHECK((bellman(M, pi, Q) - Q).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(occupancy(M, pi).sum() == doctest::Approx(1.0));
  CHECK(j_of_q(M, pi, Q) == doctest::Approx(M.d0.dot(evaluate_v(M, pi))));
}
