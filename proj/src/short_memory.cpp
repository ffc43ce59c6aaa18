#include "bope/short_memory.hpp"

#include <cmath>

namespace bope {

ShortMemoryPOMDP build_short_memory_pomdp(const POMDP& m, int T, std::size_t cap) {
  if (T < 1) throw BadSpec("window T must be >= 1");
  ShortMemoryPOMDP out;
  out.T = T;
  std::vector<History> level;
  for (int o = 0; o < m.n_obs; ++o) level.push_back(History({o}));
  for (int len = 1; len <= T; ++len) {
    for (const auto& w : level) {
      out.index.emplace(w.key(), int(out.windows.size()));
      out.windows.push_back(w);
      if (out.windows.size() > cap) throw TreeTooLarge("short-memory state space too large");
    }
    if (len == T) break;
    std::vector<History> next;
    for (const auto& w : level)
      for (int a = 0; a < m.n_actions; ++a)
        for (int o = 0; o < m.n_obs; ++o) next.push_back(w.extended(a, o));
    level.swap(next);
  }
  const int S = int(out.windows.size());
  POMDP& sm = out.model;
  sm.n_states = S;
  sm.n_actions = m.n_actions;
  sm.n_obs = m.n_obs;
  sm.rmax = m.rmax;
  sm.gamma = m.gamma;
  sm.horizon = m.horizon;
  sm.order = UpdateOrder::PredictFirst;
  sm.transition.assign(m.n_actions, Eigen::MatrixXd::Zero(S, S));
  sm.emission = Eigen::MatrixXd::Zero(S, m.n_obs);
  sm.reward = Eigen::MatrixXd::Zero(S, m.n_actions);
  sm.d0 = Eigen::VectorXd::Zero(S);
  const Eigen::VectorXd p1 = initial_obs_dist(m);
  for (int o = 0; o < m.n_obs; ++o) sm.d0(out.index.at(History({o}).key())) = p1(o);
  for (int i = 0; i < S; ++i) {
    const History& w = out.windows[i];
    sm.emission(i, w.last_obs()) = 1.0;
    const Eigen::VectorXd b = window_belief(m, w);
    for (int a = 0; a < m.n_actions; ++a) {
      sm.reward(i, a) = reward_of_belief(m, b, a);
      const Eigen::VectorXd po = obs_predictive(m, b, a);
      for (int o = 0; o < m.n_obs; ++o)
        sm.transition[a](i, out.index.at(w.extended(a, o).window(T).key())) += po(o);
    }
  }
  return out;
}

IsomorphismReport check_short_memory_isomorphism(const POMDP& m, int T, int H) {
  IsomorphismReport rep;
  POMDP base = m;
  if (!base.horizon) {
    base.horizon = H;
    base.gamma = 1.0;
  }
  const BeliefGraph g = enumerate_reachable(base, H);
  const AbstractionMap phi = build_truncation(g, T);
  const AbstractMDP abs = induce_abstract_mdp(base, g, phi);
  const ShortMemoryPOMDP sm = build_short_memory_pomdp(base, T);
  const BeliefGraph gs = enumerate_reachable(sm.model, H);
  rep.abstract_states = phi.n_reps();

  std::vector<int> x_of_state(sm.model.n_states, -1), state_of_x(phi.n_reps(), -1);
  rep.one_hot = true;
  for (int n = 0; n < gs.size(); ++n) {
    const Eigen::VectorXd b = gs.belief(n);
    Eigen::Index w;
    const double top = b.maxCoeff(&w);
    if (std::abs(top - 1.0) > 1e-12) {
      rep.one_hot = false;
      rep.failure = "non one-hot belief at " + gs.history(n).key();
      return rep;
    }
    const History tau = gs.history(n);
    const int orig = g.find(tau);
    if (orig < 0) {
      rep.failure = "history " + tau.key() + " reachable only in the short-memory model";
      return rep;
    }
    const int x = phi.assignment[orig];
    if (sm.windows[w].key() != tau.window(T).key()) {
      rep.failure = "belief support does not match window at " + tau.key();
      return rep;
    }
    if ((x_of_state[w] >= 0 && x_of_state[w] != x) || (state_of_x[x] >= 0 && state_of_x[x] != int(w))) {
      rep.failure = "correspondence is not one-to-one at " + tau.key();
      return rep;
    }
    x_of_state[w] = x;
    state_of_x[x] = int(w);

    for (int a = 0; a < m.n_actions; ++a) {
      rep.max_reward_gap = std::max(rep.max_reward_gap,
                                    std::abs(reward_of_belief(sm.model, b, a) - abs.mdp.r(x, a)));
      if (!gs.expanded(n)) continue;
      Eigen::VectorXd agg = Eigen::VectorXd::Zero(phi.n_reps());
      for (int o = 0; o < m.n_obs; ++o) {
        const int c = gs.child(n, a, o);
        if (c < 0) continue;
        const int oc = g.find(gs.history(c));
        if (oc < 0) {
          rep.failure = "child " + gs.history(c).key() + " missing from the original graph";
          return rep;
        }
        agg(phi.assignment[oc]) += gs.arrive_prob(c);
      }
      rep.max_transition_gap =
          std::max(rep.max_transition_gap, (agg.transpose() - abs.mdp.P[a].row(x)).cwiseAbs().maxCoeff());
    }
  }
  if (gs.size() != g.size()) {
    rep.failure = "graphs differ in size";
    return rep;
  }
  for (int x = 0; x < phi.n_reps(); ++x)
    if (state_of_x[x] >= 0) ++rep.matched_states;
  rep.bijection = rep.matched_states == phi.n_reps();
  if (!rep.bijection) rep.failure = "unmatched abstract states";
  return rep;
}

}  // namespace bope
