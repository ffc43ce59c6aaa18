#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "bope/belief.hpp"
#include "bope/policy.hpp"

namespace bope {

/// Enumerated on-support histories with their beliefs. Node ids are stable; children of node i
/// under (a,o) live at child_[i·|A||O| + a·|O| + o] (−1 when off-support or not expanded).
class BeliefGraph {
 public:
  BeliefGraph() = default;
  BeliefGraph(int n_states, int n_actions, int n_obs)
      : S_(n_states), A_(n_actions), O_(n_obs) {}

  int size() const { return int(parent_.size()); }
  int n_states() const { return S_; }
  int n_actions() const { return A_; }
  int n_obs() const { return O_; }
  int depth() const { return depth_; }

  Eigen::Map<const Eigen::VectorXd> belief(int node) const {
    return Eigen::Map<const Eigen::VectorXd>(beliefs_.data() + std::size_t(node) * S_, S_);
  }
  int node_depth(int node) const { return depth_of_[node]; }
  int parent(int node) const { return parent_[node]; }
  int action_in(int node) const { return action_in_[node]; }
  int obs_in(int node) const { return obs_in_[node]; }
  /// P(o | parent belief, a) for non-root nodes, P(o₁) for roots.
  double arrive_prob(int node) const { return arrive_prob_[node]; }
  bool expanded(int node) const { return expanded_[node] != 0; }
  int child(int node, int a, int o) const {
    return child_[std::size_t(node) * A_ * O_ + std::size_t(a) * O_ + o];
  }
  const std::vector<int>& roots() const { return roots_; }
  int root(int o) const { return root_by_obs_[o]; }

  History history(int node) const;
  /// Node id of τ⁺, or −1.
  int find(const History& tau) const;
  /// Probability of reaching the node when actions are fixed by its history.
  double path_prob(int node) const;

  /// Appends children of an unexpanded node; returns the number added.
  int expand(const POMDP& m, int node, const Policy* support = nullptr);

  int add_root(int o, const Eigen::VectorXd& b, double p);

  friend BeliefGraph enumerate_reachable(const POMDP&, int, const Policy*, std::size_t);

 private:
  int add_node(int parent, int a, int o, const Eigen::VectorXd& b, double p, int d);

  int S_ = 0, A_ = 0, O_ = 0, depth_ = 0;
  std::vector<double> beliefs_;
  std::vector<int> parent_, action_in_, obs_in_, depth_of_;
  std::vector<double> arrive_prob_;
  std::vector<char> expanded_;
  std::vector<int> child_;
  std::vector<int> roots_;
  std::vector<int> root_by_obs_;
};

/// All on-support histories with at most `depth` observations. With a support policy, actions of
/// probability 0 are not expanded.
BeliefGraph enumerate_reachable(const POMDP& m, int depth, const Policy* policy_support = nullptr,
                                std::size_t node_cap = 4'000'000);

/// Counting bound Σ_{k≤depth} (|O||A|)^{k−1}|O|.
double node_count_bound(int n_obs, int n_actions, int depth);

enum class Normalization { Discounted, FiniteHorizon };

/// Occupancy weights keyed by (node, state, action); state = −1 when marginalised.
struct OccupancyTable {
  using Key = std::tuple<int, int, int>;
  std::map<Key, double> weights;
  Normalization normalization = Normalization::Discounted;
  int truncation_depth = 0;
  double tail_mass_bound = 0;

  double total() const;
  double at(int node, int state, int action) const;
};

/// d^π(node,a) = (1−γ)·γ^{k−1}·Pr_π(τ_k⁺ = node, a_k = a) on the graph (1/H per step for
/// finite horizons). With joint_state, keys carry s_k and weights use Pr(s_k, τ_k⁺).
OccupancyTable occupancy(const POMDP& m, const BeliefGraph& g, const Policy& pi,
                         bool joint_state = false);
/// Convenience: enumerates the full graph first.
OccupancyTable occupancy(const POMDP& m, const Policy& pi, int depth, bool joint_state = false);

/// Probability of each node under π (product of arrival and action probabilities).
std::vector<double> reach_probabilities(const POMDP& m, const BeliefGraph& g, const Policy& pi);

}  // namespace bope
