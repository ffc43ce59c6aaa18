#include "bope/stability.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

#include "bope/rng.hpp"

namespace bope {

namespace {

std::vector<std::vector<int>> window_groups(const BeliefGraph& g, int T) {
  std::unordered_map<std::string, int> id;
  std::vector<std::vector<int>> groups;
  for (int n = 0; n < g.size(); ++n) {
    auto [it, fresh] = id.emplace(g.history(n).window(T).key(), int(groups.size()));
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(n);
  }
  return groups;
}

}  // namespace

std::vector<double> forgetting_radii(const BeliefGraph& g, int max_T) {
  std::vector<double> r;
  for (int T = 1; T <= max_T; ++T) {
    double best = 0;
    for (const auto& grp : window_groups(g, T)) best = std::max(best, l1_diameter(g, grp));
    r.push_back(best);
  }
  return r;
}

int minimal_window(const std::vector<double>& radius_by_T, double eps) {
  for (std::size_t i = 0; i < radius_by_T.size(); ++i)
    if (radius_by_T[i] <= eps) return int(i) + 1;
  return -1;
}

StabilityReport measure_stability(const POMDP& m, const BeliefGraph& g, const Policy& pi,
                                  const NodeValue& V, const NodeQ& Q, std::size_t probes,
                                  std::uint64_t seed, const std::vector<double>& eps_grid) {
  StabilityReport rep;
  rep.eps_grid = eps_grid;
  const int N = g.size();
  std::vector<Eigen::VectorXd> act(N);
  for (int n = 0; n < N; ++n) act[n] = pi.probs(g.history(n), g.belief(n));
  std::vector<double> vals;
  if (V) {
    vals.resize(N);
    for (int n = 0; n < N; ++n) vals[n] = V(n);
  }

  auto probe = [&](int i, int j) {
    const Eigen::VectorXd bi = g.belief(i), bj = g.belief(j);
    const double d = l1(bi, bj);
    ++rep.sample_count;
    if (d < 1e-12) return;
    rep.L_pi_hat = std::max(rep.L_pi_hat, l1(act[i], act[j]) / d);
    if (V) rep.L_V_hat = std::max(rep.L_V_hat, std::abs(vals[i] - vals[j]) / d);
    if (Q)
      for (int a = 0; a < m.n_actions; ++a)
        rep.L_Q_hat = std::max(rep.L_Q_hat, std::abs(Q(i, a) - Q(j, a)) / d);
    for (int a = 0; a < m.n_actions; ++a)
      for (int o = 0; o < m.n_obs; ++o) {
        Eigen::VectorXd ui = belief_update_unnormalized(m, bi, a, o, m.order);
        Eigen::VectorXd uj = belief_update_unnormalized(m, bj, a, o, m.order);
        if (ui.sum() <= 0 || uj.sum() <= 0) continue;
        rep.update_ratio_max = std::max(rep.update_ratio_max, l1(ui / ui.sum(), uj / uj.sum()) / d);
      }
  };

  const double pairs = 0.5 * double(N) * double(N - 1);
  if (pairs <= double(probes)) {
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j) probe(i, j);
  } else {
    auto rng = make_stream(seed, named_stream("probes"));
    std::uniform_int_distribution<int> pick(0, N - 1);
    for (std::size_t k = 0; k < probes; ++k) {
      const int i = pick(rng);
      int j = pick(rng);
      if (j == i) j = (i + 1) % N;
      probe(i, j);
    }
  }

  double vmax = 0;
  for (double v : vals) vmax = std::max(vmax, std::abs(v));
  for (int T = 1; T <= g.depth(); ++T) {
    double rb = 0, rp = 0, rv = 0;
    for (const auto& grp : window_groups(g, T)) {
      rb = std::max(rb, l1_diameter(g, grp));
      std::vector<Eigen::VectorXd> ps;
      for (int n : grp) ps.push_back(act[n]);
      rp = std::max(rp, l1_diameter(ps));
      if (V) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int n : grp) {
          lo = std::min(lo, vals[n]);
          hi = std::max(hi, vals[n]);
        }
        rv = std::max(rv, hi - lo);
      }
    }
    rep.belief_radius_by_T.push_back(rb);
    rep.policy_radius_by_T.push_back(rp);
    rep.value_radius_by_T.push_back(rv);
  }
  for (double e : eps_grid) {
    rep.T0_curve.push_back(minimal_window(rep.belief_radius_by_T, e));
    rep.T1_curve.push_back(minimal_window(rep.policy_radius_by_T, e));
    std::vector<double> scaled = rep.value_radius_by_T;
    rep.T2_curve.push_back(V ? minimal_window(scaled, vmax * e) : -1);
  }
  return rep;
}

double compute_Lphi1(double L_pi, double L_V, double R, double gamma, std::optional<int> horizon) {
  const double h = horizon ? double(*horizon) : 1.0 / (1.0 - gamma);
  const double g = horizon ? 1.0 : gamma;
  return ((L_pi + 1) * R + 2 * L_V) * h + (g * R * L_pi + R) * h * h;
}

}  // namespace bope
