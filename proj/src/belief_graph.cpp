#include "bope/belief_graph.hpp"

#include <cmath>

namespace bope {

int BeliefGraph::add_node(int parent, int a, int o, const Eigen::VectorXd& b, double p, int d) {
  const int id = size();
  parent_.push_back(parent);
  action_in_.push_back(a);
  obs_in_.push_back(o);
  depth_of_.push_back(d);
  arrive_prob_.push_back(p);
  expanded_.push_back(0);
  beliefs_.insert(beliefs_.end(), b.data(), b.data() + S_);
  child_.insert(child_.end(), std::size_t(A_) * O_, -1);
  depth_ = std::max(depth_, d);
  return id;
}

int BeliefGraph::add_root(int o, const Eigen::VectorXd& b, double p) {
  if (root_by_obs_.empty()) root_by_obs_.assign(O_, -1);
  const int id = add_node(-1, -1, o, b, p, 1);
  roots_.push_back(id);
  root_by_obs_[o] = id;
  return id;
}

History BeliefGraph::history(int node) const {
  std::vector<int> rev;
  for (int n = node; n >= 0; n = parent_[n]) {
    rev.push_back(obs_in_[n]);
    if (parent_[n] >= 0) rev.push_back(action_in_[n]);
  }
  return History(std::vector<int>(rev.rbegin(), rev.rend()));
}

int BeliefGraph::find(const History& tau) const {
  if (!tau.ends_with_obs() || root_by_obs_.empty()) return -1;
  if (tau.seq[0] < 0 || tau.seq[0] >= O_) return -1;
  int n = root_by_obs_[tau.seq[0]];
  for (std::size_t i = 1; n >= 0 && i + 1 < tau.seq.size(); i += 2) {
    const int a = tau.seq[i], o = tau.seq[i + 1];
    if (a < 0 || a >= A_ || o < 0 || o >= O_) return -1;
    n = child(n, a, o);
  }
  return n;
}

double BeliefGraph::path_prob(int node) const {
  double p = 1;
  for (int n = node; n >= 0; n = parent_[n]) p *= arrive_prob_[n];
  return p;
}

int BeliefGraph::expand(const POMDP& m, int node, const Policy* support) {
  if (expanded(node)) return 0;
  expanded_[node] = 1;
  const Eigen::VectorXd b = belief(node);
  Eigen::VectorXd act;
  History tau;
  if (support) {
    tau = history(node);
    act = support->probs(tau, b);
  }
  int added = 0;
  for (int a = 0; a < A_; ++a) {
    if (support && act(a) <= 0) continue;
    for (int o = 0; o < O_; ++o) {
      Eigen::VectorXd u = belief_update_unnormalized(m, b, a, o, m.order);
      const double z = u.sum();
      if (z <= 0) continue;
      const int id = add_node(node, a, o, u / z, z, depth_of_[node] + 1);
      child_[std::size_t(node) * A_ * O_ + std::size_t(a) * O_ + o] = id;
      ++added;
    }
  }
  return added;
}

BeliefGraph enumerate_reachable(const POMDP& m, int depth, const Policy* support, std::size_t cap) {
  if (depth < 1) throw BadSpec("depth must be >= 1");
  BeliefGraph g(m.n_states, m.n_actions, m.n_obs);
  g.root_by_obs_.assign(m.n_obs, -1);
  const Eigen::VectorXd p1 = initial_obs_dist(m);
  for (int o = 0; o < m.n_obs; ++o)
    if (p1(o) > 0) g.add_root(o, initial_belief(m, o), p1(o));
  for (int n = 0; n < g.size(); ++n) {
    if (g.node_depth(n) >= depth) continue;
    g.expand(m, n, support);
    if (std::size_t(g.size()) > cap)
      throw TreeTooLarge("belief graph exceeded " + std::to_string(cap) + " nodes");
  }
  g.depth_ = depth;
  return g;
}

double node_count_bound(int n_obs, int n_actions, int depth) {
  double total = 0, level = n_obs;
  for (int k = 1; k <= depth; ++k, level *= double(n_obs) * n_actions) total += level;
  return total;
}

double OccupancyTable::total() const {
  double t = 0;
  for (const auto& [k, w] : weights) t += w;
  return t;
}

double OccupancyTable::at(int node, int state, int action) const {
  auto it = weights.find({node, state, action});
  return it == weights.end() ? 0.0 : it->second;
}

std::vector<double> reach_probabilities(const POMDP& m, const BeliefGraph& g, const Policy& pi) {
  std::vector<double> reach(g.size(), 0.0);
  std::vector<Eigen::VectorXd> act(g.size());
  for (int n = 0; n < g.size(); ++n) {
    const int p = g.parent(n);
    if (p < 0) {
      reach[n] = g.arrive_prob(n);
    } else {
      if (act[p].size() == 0) act[p] = pi.probs(g.history(p), g.belief(p));
      reach[n] = reach[p] * act[p](g.action_in(n)) * g.arrive_prob(n);
    }
  }
  (void)m;
  return reach;
}

OccupancyTable occupancy(const POMDP& m, const BeliefGraph& g, const Policy& pi, bool joint_state) {
  OccupancyTable t;
  t.truncation_depth = g.depth();
  const bool fh = m.finite_horizon();
  t.normalization = fh ? Normalization::FiniteHorizon : Normalization::Discounted;
  if (fh && g.depth() != *m.horizon)
    throw BadSpec("finite-horizon occupancy needs graph depth = H");
  t.tail_mass_bound = fh ? 0.0 : std::pow(m.gamma, g.depth());
  const std::vector<double> reach = reach_probabilities(m, g, pi);
  for (int n = 0; n < g.size(); ++n) {
    if (reach[n] <= 0) continue;
    const int k = g.node_depth(n);
    const double w = fh ? reach[n] / double(*m.horizon) : (1 - m.gamma) * std::pow(m.gamma, k - 1) * reach[n];
    const Eigen::VectorXd b = g.belief(n);
    const Eigen::VectorXd act = pi.probs(g.history(n), b);
    for (int a = 0; a < m.n_actions; ++a) {
      if (act(a) <= 0) continue;
      if (joint_state) {
        for (int s = 0; s < m.n_states; ++s)
          if (b(s) > 0) t.weights[{n, s, a}] += w * act(a) * b(s);
      } else {
        t.weights[{n, -1, a}] += w * act(a);
      }
    }
  }
  return t;
}

OccupancyTable occupancy(const POMDP& m, const Policy& pi, int depth, bool joint_state) {
  const BeliefGraph g = enumerate_reachable(m, depth);
  return occupancy(m, g, pi, joint_state);
}

}  // namespace bope
