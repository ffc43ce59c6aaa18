#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>

#include "bope/belief.hpp"
#include "bope/policy.hpp"
#include "bope/rng.hpp"

namespace bope {

struct ExactValueOptions {
  std::size_t node_cap = 5'000'000;
  bool record_values = false;
};

struct ValueResult {
  double J = 0;
  double tail_bound = 0;
  std::size_t node_count = 0;
  std::unordered_map<std::string, double> V;  // keyed by canonical τ⁺
};

/// Backward induction on the history tree; rewards of steps 1..depth are counted.
ValueResult exact_value(const POMDP& m, const Policy& pi, int depth, const ExactValueOptions& opt = {});

/// Value of the subtree below τ⁺ for `remaining` more steps (including the current one).
double exact_value_from(const POMDP& m, const Policy& pi, const History& tau, int remaining,
                        std::size_t node_cap = 5'000'000);

/// Same quantity as exact_value for bounded-memory policies via the (state, window) chain.
double window_chain_value(const POMDP& m, const Policy& pi, int depth);

/// Certified truncation tail: γ^depth·Rmax/(1−γ), or the remaining steps for finite horizons.
double tail_bound(const POMDP& m, int depth);

/// V_s for an open-loop policy; V(b) = ⟨b, V_s⟩ exactly.
Eigen::VectorXd open_loop_state_values(const POMDP& m, const Eigen::VectorXd& action_dist);

/// Latent-state simulator honouring the model's update order.
struct Simulator {
  const POMDP& m;
  std::mt19937_64 rng;

  Simulator(const POMDP& model, std::mt19937_64 r) : m(model), rng(std::move(r)) {}

  int sample_state(const Eigen::VectorXd& p) { return sample_categorical(rng, p); }
  int sample_obs(int s) { return sample_categorical(rng, m.emission.row(s)); }
  int sample_next(int s, int a) { return sample_categorical(rng, m.transition[a].row(s)); }

  /// One step from latent s with action a: returns (reward, next obs, next state).
  std::tuple<double, int, int> step(int s, int a) {
    const double r = m.reward(s, a);
    if (m.order == UpdateOrder::PredictFirst) {
      const int s2 = sample_next(s, a);
      return {r, sample_obs(s2), s2};
    }
    const int o = sample_obs(s);
    return {r, o, sample_next(s, a)};
  }
};

struct MonteCarloResult {
  double mean = 0;
  double stderr_ = 0;
  std::size_t n = 0;
};

/// Discounted return of `depth` steps averaged over n rollouts in fixed shards.
MonteCarloResult monte_carlo_value(const POMDP& m, const Policy& pi, int depth, std::size_t n,
                                   std::uint64_t seed, int workers = 1);

}  // namespace bope
