#include "bope/abstraction.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

namespace bope {

double l1_diameter(const std::vector<Eigen::VectorXd>& xs) {
  if (xs.size() < 2) return 0.0;
  const int d = int(xs[0].size());
  if (d > 20) {
    double best = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t j = i + 1; j < xs.size(); ++j) best = std::max(best, l1(xs[i], xs[j]));
    return best;
  }
  double best = 0;
  Eigen::VectorXd sigma(d);
  for (unsigned mask = 0; mask < (1u << (d - 1)); ++mask) {
    sigma(0) = 1;
    for (int i = 1; i < d; ++i) sigma(i) = (mask >> (i - 1)) & 1u ? -1.0 : 1.0;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& x : xs) {
      const double v = sigma.dot(x);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    best = std::max(best, hi - lo);
  }
  return best;
}

double l1_diameter(const BeliefGraph& g, const std::vector<int>& nodes) {
  std::vector<Eigen::VectorXd> xs;
  xs.reserve(nodes.size());
  for (int n : nodes) xs.emplace_back(g.belief(n));
  return l1_diameter(xs);
}

AbstractionMap build_eps_cover(const BeliefGraph& g, double eps) {
  if (!(eps > 0)) throw BadSpec("eps must be > 0");
  AbstractionMap phi;
  phi.kind = AbstractionKind::EpsilonCover;
  phi.eps = eps;
  const int N = g.size();
  if (N == 0) return phi;
  int seed = -1;
  for (int r : g.roots())
    if (seed < 0 || g.arrive_prob(r) > g.arrive_prob(seed)) seed = r;
  std::vector<double> mind(N, std::numeric_limits<double>::infinity());
  phi.assignment.assign(N, -1);
  int next = seed;
  while (true) {
    const int ord = phi.n_reps();
    phi.representatives.push_back(next);
    const Eigen::VectorXd c = g.belief(next);
    for (int n = 0; n < N; ++n) {
      const double d = l1(g.belief(n), c);
      if (d < mind[n]) {
        mind[n] = d;
        phi.assignment[n] = ord;
      }
    }
    int far = 0;
    for (int n = 1; n < N; ++n)
      if (mind[n] > mind[far]) far = n;
    if (mind[far] <= eps) break;
    next = far;
  }
  phi.radius_eps = 0;
  for (int n = 0; n < N; ++n) phi.radius_eps = std::max(phi.radius_eps, mind[n]);
  return phi;
}

AbstractionMap build_truncation(const BeliefGraph& g, int T) {
  if (T < 1) throw BadSpec("window T must be >= 1");
  AbstractionMap phi;
  phi.kind = AbstractionKind::Truncation;
  phi.window = T;
  const int N = g.size();
  phi.assignment.assign(N, -1);
  std::unordered_map<std::string, int> ord_of;
  std::vector<History> windows;
  std::vector<std::vector<int>> members;
  for (int n = 0; n < N; ++n) {
    const History w = g.history(n).window(T);
    auto [it, fresh] = ord_of.emplace(w.key(), int(windows.size()));
    if (fresh) {
      windows.push_back(w);
      members.emplace_back();
    }
    phi.assignment[n] = it->second;
    members[it->second].push_back(n);
  }
  phi.representatives.resize(windows.size());
  for (std::size_t x = 0; x < windows.size(); ++x) {
    const int exact = g.find(windows[x]);
    phi.representatives[x] = exact >= 0 ? exact : members[x].front();
    phi.radius_eps = std::max(phi.radius_eps, l1_diameter(g, members[x]));
  }
  return phi;
}

int nearest_rep(const BeliefGraph& g, const AbstractionMap& phi, const Eigen::VectorXd& b, double* dist) {
  int best = -1;
  double bd = std::numeric_limits<double>::infinity();
  for (int x = 0; x < phi.n_reps(); ++x) {
    const double d = l1(g.belief(phi.representatives[x]), b);
    if (d < bd) {
      bd = d;
      best = x;
    }
  }
  if (dist) *dist = bd;
  return best;
}

int close_cover(const POMDP& m, BeliefGraph& g, AbstractionMap& phi, std::size_t rep_cap) {
  if (phi.kind != AbstractionKind::EpsilonCover) throw BadSpec("close_cover needs an eps-cover");
  int added = 0;
  for (std::size_t i = 0; i < phi.representatives.size(); ++i) {
    const int node = phi.representatives[i];
    if (g.expanded(node)) continue;
    const int before = g.size();
    g.expand(m, node);
    phi.assignment.resize(g.size(), -1);
    for (int c = before; c < g.size(); ++c) {
      double d;
      const int x = nearest_rep(g, phi, g.belief(c), &d);
      if (d <= phi.eps) {
        phi.assignment[c] = x;
      } else {
        phi.assignment[c] = phi.n_reps();
        phi.representatives.push_back(c);
        ++added;
        if (phi.representatives.size() > rep_cap)
          throw TreeTooLarge("cover closure exceeded " + std::to_string(rep_cap) + " representatives");
      }
    }
  }
  phi.radius_eps = 0;
  for (int n = 0; n < g.size(); ++n) {
    double d;
    phi.assignment[n] = nearest_rep(g, phi, g.belief(n), &d);
    phi.radius_eps = std::max(phi.radius_eps, d);
  }
  return added;
}

AbstractMDP induce_abstract_mdp(const POMDP& m, const BeliefGraph& g, const AbstractionMap& phi,
                                const Policy* weights_policy, FrontierClosure closure) {
  const int K = phi.n_reps(), A = m.n_actions;
  if (int(phi.assignment.size()) != g.size()) throw DomainMismatch("abstraction does not cover the graph");
  AbstractMDP out;
  auto& M = out.mdp;
  M.n_states = K;
  M.n_actions = A;
  M.gamma = m.horizon ? 1.0 : m.gamma;
  M.P.assign(A, Eigen::MatrixXd::Zero(K, K));
  M.r = Eigen::MatrixXd::Zero(K, A);
  M.d0 = Eigen::VectorXd::Zero(K);
  out.rep_nodes = phi.representatives;

  std::vector<std::vector<std::pair<int, double>>> weights(K);
  if (phi.p_family == PFamily::OccupancyWeighted) {
    if (!weights_policy) throw BadSpec("occupancy-weighted p_x needs a policy");
    const auto reach = reach_probabilities(m, g, *weights_policy);
    std::vector<double> tot(K, 0.0);
    for (int n = 0; n < g.size(); ++n) {
      const double w = reach[n] * (m.horizon ? 1.0 : std::pow(m.gamma, g.node_depth(n) - 1));
      if (w > 0) {
        weights[phi.assignment[n]].push_back({n, w});
        tot[phi.assignment[n]] += w;
      }
    }
    for (int x = 0; x < K; ++x) {
      if (tot[x] <= 0) {
        weights[x] = {{phi.representatives[x], 1.0}};
      } else {
        for (auto& [n, w] : weights[x]) w /= tot[x];
      }
    }
  } else {
    for (int x = 0; x < K; ++x) weights[x] = {{phi.representatives[x], 1.0}};
  }

  for (int x = 0; x < K; ++x) {
    for (const auto& [node, w] : weights[x]) {
      const Eigen::VectorXd b = g.belief(node);
      for (int a = 0; a < A; ++a) {
        M.r(x, a) += w * reward_of_belief(m, b, a);
        double total = 0;
        if (g.expanded(node)) {
          for (int o = 0; o < m.n_obs; ++o) {
            const int c = g.child(node, a, o);
            if (c < 0) continue;
            M.P[a](x, phi.assignment[c]) += w * g.arrive_prob(c);
            total += g.arrive_prob(c);
          }
        }
        if (total > 0) continue;
        switch (closure) {
          case FrontierClosure::Error:
            throw DanglingFrontier("node " + g.history(node).key() + " has no children");
          case FrontierClosure::SelfLoop:
            M.P[a](x, x) += w;
            break;
          case FrontierClosure::NearestRep:
            for (int o = 0; o < m.n_obs; ++o) {
              Eigen::VectorXd u = belief_update_unnormalized(m, b, a, o, m.order);
              const double z = u.sum();
              if (z > 0) M.P[a](x, nearest_rep(g, phi, u / z)) += w * z;
            }
            break;
        }
        ++out.frontier_closures;
      }
    }
  }
  for (int r : g.roots()) M.d0(phi.assignment[r]) += g.arrive_prob(r);
  if (out.frontier_closures > 0)
    out.frontier_bias = m.horizon ? 0.0 : std::pow(m.gamma, g.depth()) * m.rmax / (1 - m.gamma);
  return out;
}

Eigen::MatrixXd lift(const Eigen::MatrixXd& f_bin, const AbstractionMap& phi) {
  Eigen::MatrixXd out(phi.assignment.size(), f_bin.cols());
  for (std::size_t n = 0; n < phi.assignment.size(); ++n) {
    const int x = phi.assignment[n];
    if (x < 0 || x >= f_bin.rows()) throw DomainMismatch("table does not cover the abstraction");
    out.row(Eigen::Index(n)) = f_bin.row(x);
  }
  return out;
}

Eigen::MatrixXd restrict_to_reps(const Eigen::MatrixXd& f_nodes, const AbstractionMap& phi) {
  Eigen::MatrixXd out(phi.n_reps(), f_nodes.cols());
  for (int x = 0; x < phi.n_reps(); ++x) out.row(x) = f_nodes.row(phi.representatives[x]);
  return out;
}

Eigen::MatrixXd abstract_policy_matrix(const BeliefGraph& g, const AbstractionMap& phi, const Policy& pi) {
  Eigen::MatrixXd P(phi.n_reps(), pi.n_actions);
  for (int x = 0; x < phi.n_reps(); ++x) {
    const int n = phi.representatives[x];
    P.row(x) = pi.probs(g.history(n), g.belief(n)).transpose();
  }
  return P;
}

Eigen::VectorXd window_belief(const POMDP& m, const History& w) {
  History cur = w;
  while (true) {
    try {
      return belief_of_history(m, cur);
    } catch (const UnreachableObservation&) {
      if (cur.seq.size() <= 1) break;
      cur = History(std::vector<int>(cur.seq.begin() + 2, cur.seq.end()));
    }
  }
  Eigen::VectorXd b = m.emission.col(w.last_obs());
  if (b.sum() <= 0) throw UnreachableObservation("observation never emitted");
  return b / b.sum();
}

nlohmann::json abstraction_to_json(const BeliefGraph& g, const AbstractionMap& phi) {
  nlohmann::json j;
  j["kind"] = phi.kind == AbstractionKind::EpsilonCover ? "epsilon-cover" : "truncation";
  j["eps"] = phi.eps;
  j["window"] = phi.window;
  j["radius_eps"] = phi.radius_eps;
  j["p_family"] = phi.p_family == PFamily::PointMass ? "point-mass" : "occupancy-weighted";
  nlohmann::json reps = nlohmann::json::array();
  for (int r : phi.representatives) reps.push_back(g.history(r).key());
  j["representatives"] = reps;
  nlohmann::json as = nlohmann::json::object();
  for (int n = 0; n < g.size(); ++n) as[g.history(n).key()] = phi.assignment[n];
  j["assignment"] = as;
  return j;
}

AbstractionMap abstraction_from_json(const BeliefGraph& g, const nlohmann::json& j) {
  AbstractionMap phi;
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind != "epsilon-cover" && kind != "truncation") throw SchemaMismatch("unknown kind " + kind);
    phi.kind = kind == "truncation" ? AbstractionKind::Truncation : AbstractionKind::EpsilonCover;
    phi.eps = j.at("eps").get<double>();
    phi.window = j.at("window").get<int>();
    phi.radius_eps = j.at("radius_eps").get<double>();
    phi.p_family = j.value("p_family", "point-mass") == "point-mass" ? PFamily::PointMass
                                                                      : PFamily::OccupancyWeighted;
    for (const auto& k : j.at("representatives")) {
      const int n = g.find(History::parse(k.get<std::string>()));
      if (n < 0) throw DomainMismatch("representative " + k.get<std::string>() + " not in graph");
      phi.representatives.push_back(n);
    }
    phi.assignment.assign(g.size(), -1);
    for (auto it = j.at("assignment").begin(); it != j.at("assignment").end(); ++it) {
      const int n = g.find(History::parse(it.key()));
      if (n < 0) throw DomainMismatch("node " + it.key() + " not in graph");
      phi.assignment[n] = it.value().get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaMismatch(e.what());
  }
  for (int x : phi.assignment)
    if (x < 0 || x >= phi.n_reps()) throw DomainMismatch("abstraction does not cover the graph");
  return phi;
}

}  // namespace bope
