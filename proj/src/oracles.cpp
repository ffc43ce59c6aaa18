#include "bope/oracles.hpp"

#include <cmath>
#include <map>

#include "bope/parallel.hpp"

namespace bope {

double tail_bound(const POMDP& m, int depth) {
  if (m.horizon) return depth >= *m.horizon ? 0.0 : double(*m.horizon - depth) * m.rmax;
  return std::pow(m.gamma, depth) * m.rmax / (1.0 - m.gamma);
}

namespace {

struct TreeWalker {
  const POMDP& m;
  const Policy& pi;
  std::size_t cap;
  std::size_t count = 0;
  std::unordered_map<std::string, double>* record = nullptr;

  double value(const Eigen::VectorXd& b, const History& tau, int remaining) {
    if (++count > cap) throw TreeTooLarge("exact_value exceeded node cap " + std::to_string(cap));
    const Eigen::VectorXd p = pi.probs(tau, b);
    double v = 0;
    for (int a = 0; a < m.n_actions; ++a) {
      if (p(a) <= 0) continue;
      double q = reward_of_belief(m, b, a);
      if (remaining > 1) {
        double cont = 0;
        for (int o = 0; o < m.n_obs; ++o) {
          Eigen::VectorXd u = belief_update_unnormalized(m, b, a, o, m.order);
          const double z = u.sum();
          if (z <= 0) continue;
          cont += z * value(u / z, tau.extended(a, o), remaining - 1);
        }
        q += m.gamma * cont;
      }
      v += p(a) * q;
    }
    if (record) (*record)[tau.key()] = v;
    return v;
  }
};

}  // namespace

ValueResult exact_value(const POMDP& m, const Policy& pi, int depth, const ExactValueOptions& opt) {
  if (depth < 1) throw BadSpec("depth must be >= 1");
  TreeWalker w{m, pi, opt.node_cap};
  ValueResult res;
  if (opt.record_values) w.record = &res.V;
  const Eigen::VectorXd p1 = initial_obs_dist(m);
  for (int o = 0; o < m.n_obs; ++o) {
    if (p1(o) <= 0) continue;
    res.J += p1(o) * w.value(initial_belief(m, o), History({o}), depth);
  }
  res.node_count = w.count;
  res.tail_bound = tail_bound(m, depth);
  return res;
}

double exact_value_from(const POMDP& m, const Policy& pi, const History& tau, int remaining,
                        std::size_t node_cap) {
  TreeWalker w{m, pi, node_cap};
  return w.value(belief_of_history(m, tau), tau, remaining);
}

double window_chain_value(const POMDP& m, const Policy& pi, int depth) {
  const int mem = pi.memory();
  if (mem < 0) throw DomainMismatch("window_chain_value needs a bounded-memory policy");
  const int W = std::max(1, mem);
  using Key = std::pair<int, History>;
  std::map<Key, double> dist;
  for (int s = 0; s < m.n_states; ++s)
    for (int o = 0; o < m.n_obs; ++o) {
      const double p = m.d0(s) * m.emission(s, o);
      if (p > 0) dist[{s, History({o})}] += p;
    }
  const Eigen::VectorXd dummy;
  double J = 0, disc = 1;
  for (int k = 1; k <= depth; ++k) {
    std::map<Key, double> next;
    for (const auto& [key, p] : dist) {
      const auto& [s, w] = key;
      const Eigen::VectorXd act = pi.probs(w, dummy);
      for (int a = 0; a < m.n_actions; ++a) {
        if (act(a) <= 0) continue;
        const double pa = p * act(a);
        J += disc * pa * m.reward(s, a);
        if (k == depth) continue;
        for (int s2 = 0; s2 < m.n_states; ++s2) {
          const double pt = m.transition[a](s, s2);
          if (pt <= 0) continue;
          for (int o = 0; o < m.n_obs; ++o) {
            const double po = m.order == UpdateOrder::PredictFirst ? m.emission(s2, o) : m.emission(s, o);
            if (po <= 0) continue;
            next[{s2, w.extended(a, o).window(W)}] += pa * pt * po;
          }
        }
      }
    }
    dist.swap(next);
    disc *= m.gamma;
  }
  return J;
}

Eigen::VectorXd open_loop_state_values(const POMDP& m, const Eigen::VectorXd& act) {
  if (m.horizon) throw BadDiscount("open-loop closed form needs a discounted model");
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(m.n_states, m.n_states);
  for (int a = 0; a < m.n_actions; ++a) P += act(a) * m.transition[a];
  const Eigen::VectorXd r = m.reward * act;
  return (Eigen::MatrixXd::Identity(m.n_states, m.n_states) - m.gamma * P).partialPivLu().solve(r);
}

MonteCarloResult monte_carlo_value(const POMDP& m, const Policy& pi, int depth, std::size_t n,
                                   std::uint64_t seed, int workers) {
  constexpr std::size_t kShard = 8192;
  const int shards = int((n + kShard - 1) / kShard);
  std::vector<double> sums(shards, 0.0), sq(shards, 0.0);
  parallel_for(shards, workers, [&](int k) {
    Simulator sim(m, make_stream(seed, std::uint64_t(k)));
    const std::size_t lo = std::size_t(k) * kShard, hi = std::min(n, lo + kShard);
    for (std::size_t i = lo; i < hi; ++i) {
      int s = sim.sample_state(m.d0);
      int o = sim.sample_obs(s);
      History tau({o});
      Eigen::VectorXd b;
      if (pi.needs_belief()) b = initial_belief(m, o);
      double ret = 0, disc = 1;
      for (int t = 1; t <= depth; ++t) {
        const int a = sample_categorical(sim.rng, pi.probs(tau, b));
        auto [r, o2, s2] = sim.step(s, a);
        ret += disc * r;
        disc *= m.gamma;
        if (t == depth) break;
        if (pi.needs_belief()) b = belief_update(m, b, a, o2);
        if (pi.memory() >= 0) {
          tau = tau.extended(a, o2).window(std::max(1, pi.memory()));
        } else {
          tau = tau.extended(a, o2);
        }
        s = s2;
      }
      sums[k] += ret;
      sq[k] += ret * ret;
    }
  });
  MonteCarloResult res;
  res.n = n;
  if (n == 0) return res;
  res.mean = tree_sum(sums) / double(n);
  const double var = std::max(0.0, tree_sum(sq) / double(n) - res.mean * res.mean);
  res.stderr_ = std::sqrt(var / double(n));
  return res;
}

}  // namespace bope
