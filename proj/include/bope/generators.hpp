#pragma once

#include <cstdint>
#include <optional>

#include "bope/mdp.hpp"
#include "bope/policy.hpp"
#include "bope/pomdp.hpp"

namespace bope {

struct ModelShape {
  int n_states = 2;
  int n_actions = 2;
  int n_obs = 2;
  double gamma = 0.9;
  std::optional<int> horizon;
  double rmax = 1.0;
};

/// Dirichlet(alpha) rows everywhere, rewards uniform on [0, rmax].
POMDP random_dense(const ModelShape& shape, std::uint64_t seed, double alpha = 1.0);

/// Each observation belongs to exactly one state (obs_per_state blocks), so beliefs stay one-hot
/// under predict-first filtering.
POMDP revealing(const ModelShape& shape, int obs_per_state, std::uint64_t seed);

/// 1 action, 2 states, 4 observations, identity transition, uniform d0;
/// Ω(·|s₁) = (½, 0, ½−ξ, ξ), Ω(·|s₂) = (0, ½, ξ, ½−ξ).
POMDP counter_example(double xi, double gamma = 0.9);

/// Transitions T_a = U_a·B with B holding `rank` basis distributions, so predicted beliefs stay in
/// the convex hull of the basis rows.
POMDP low_rank(const ModelShape& shape, int rank, std::uint64_t seed);

/// T_a = λ·M_a + (1−λ)·𝟙qᵀ: Dobrushin coefficient at most λ.
POMDP fast_forgetting(const ModelShape& shape, double lambda, std::uint64_t seed);

/// T_a(s′|s) = p_a(s′) independent of s; the reachable belief set is finite.
POMDP reset_dynamics(const ModelShape& shape, std::uint64_t seed);

/// One state, one observation, one action, reward r.
POMDP constant_chain(double r, double gamma, double rmax = 1.0);

ExplicitMDP<double> random_explicit_mdp(int n_states, int n_actions, double gamma, std::uint64_t seed);
Eigen::MatrixXd random_policy_matrix(int n_states, int n_actions, std::uint64_t seed);

/// Memoryless policy with every probability at least min_prob.
Policy random_memoryless(int n_obs, int n_actions, std::uint64_t seed, double min_prob = 0.05);
/// History-table policy over all histories up to `depth` with random distributions.
Policy random_history_policy(const POMDP& m, int depth, std::uint64_t seed, double min_prob = 0.05);
/// Belief-linear policy with random rows.
/// Table over every window of at most T observations.
Policy random_truncated_policy(const POMDP& m, int T, std::uint64_t seed, double min_prob = 0.05);

Policy random_belief_linear(int n_states, int n_actions, std::uint64_t seed, double alpha = 1.0);

}  // namespace bope
