#include "bope/fdvf.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include "bope/parallel.hpp"

namespace bope {

namespace {

long ipow(long b, int e) {
  long r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

History tau_plus(const std::vector<int>& obs, const std::vector<int>& acts, int h) {
  History t;
  for (int k = 0; k < h; ++k) {
    if (k) t.seq.push_back(acts[k - 1]);
    t.seq.push_back(obs[k]);
  }
  return t;
}

void require_predict_first(const POMDP& m) {
  if (m.order != UpdateOrder::PredictFirst) throw DomainMismatch("FDVF routines need predict-first filtering");
}

Eigen::VectorXd policy_probs(const Policy& pi, const History& t, const Eigen::VectorXd& b) {
  return pi.probs(t, b);
}

using HistoryFn = std::function<void(int h, const std::vector<int>& obs, const std::vector<int>& acts,
                                     double prob, const Eigen::VectorXd& prior)>;

/// Visits every τ_h (h = 1..H) with P_π(τ_h) > 0 together with the state prior of s_h.
void for_each_history(const POMDP& m, const Policy& pi, int H, const HistoryFn& fn) {
  std::vector<int> obs, acts;
  std::function<void(int, const Eigen::VectorXd&, double)> rec = [&](int h, const Eigen::VectorXd& prior,
                                                                      double prob) {
    fn(h, obs, acts, prob, prior);
    if (h == H) return;
    const Eigen::VectorXd po = m.emission.transpose() * prior;
    for (int o = 0; o < m.n_obs; ++o) {
      if (po(o) <= 0) continue;
      const Eigen::VectorXd b = m.emission.col(o).cwiseProduct(prior) / po(o);
      obs.push_back(o);
      const Eigen::VectorXd pa = policy_probs(pi, tau_plus(obs, acts, h), b);
      for (int a = 0; a < m.n_actions; ++a) {
        if (pa(a) <= 0) continue;
        acts.push_back(a);
        rec(h + 1, m.transition[a].transpose() * b, prob * po(o) * pa(a));
        acts.pop_back();
      }
      obs.pop_back();
    }
  };
  rec(1, m.d0, 1.0);
}

using LeafFn = std::function<void(const std::vector<int>& obs, const std::vector<int>& acts, double w)>;

/// Walks futures from step h given the history arrays (length h−1). `q` is an unnormalised
/// state distribution of s_h; `prior` is the filter prior used for the policy's belief input.
/// Leaves receive the mass of q that produces the full trajectory.
void walk_futures(const POMDP& m, const Policy& pi, int h, int H, const Eigen::VectorXd& q,
                  const Eigen::VectorXd& prior, std::vector<int>& obs, std::vector<int>& acts,
                  const LeafFn& leaf) {
  if (h > H) {
    leaf(obs, acts, q.sum());
    return;
  }
  const Eigen::VectorXd po = m.emission.transpose() * prior;
  for (int o = 0; o < m.n_obs; ++o) {
    const Eigen::VectorXd qo = m.emission.col(o).cwiseProduct(q);
    if (qo.sum() <= 0 || po(o) <= 0) continue;
    const Eigen::VectorXd b = m.emission.col(o).cwiseProduct(prior) / po(o);
    obs.push_back(o);
    const Eigen::VectorXd pa = policy_probs(pi, tau_plus(obs, acts, h), b);
    for (int a = 0; a < m.n_actions; ++a) {
      if (pa(a) <= 0) continue;
      acts.push_back(a);
      walk_futures(m, pi, h + 1, H, m.transition[a].transpose() * (pa(a) * qo), m.transition[a].transpose() * b,
                   obs, acts, leaf);
      acts.pop_back();
    }
    obs.pop_back();
  }
}

/// E_π[Σ_{k=h}^H r_k · 1] for the unnormalised state distribution q of s_h.
double future_reward(const POMDP& m, const Policy& pi, int h, int H, const Eigen::VectorXd& q,
                     const Eigen::VectorXd& prior, std::vector<int>& obs, std::vector<int>& acts) {
  if (h > H) return 0.0;
  double total = 0;
  const Eigen::VectorXd po = m.emission.transpose() * prior;
  for (int o = 0; o < m.n_obs; ++o) {
    const Eigen::VectorXd qo = m.emission.col(o).cwiseProduct(q);
    if (qo.sum() <= 0 || po(o) <= 0) continue;
    const Eigen::VectorXd b = m.emission.col(o).cwiseProduct(prior) / po(o);
    obs.push_back(o);
    const Eigen::VectorXd pa = policy_probs(pi, tau_plus(obs, acts, h), b);
    for (int a = 0; a < m.n_actions; ++a) {
      if (pa(a) <= 0) continue;
      acts.push_back(a);
      total += pa(a) * qo.dot(m.reward.col(a));
      total += future_reward(m, pi, h + 1, H, m.transition[a].transpose() * (pa(a) * qo),
                             m.transition[a].transpose() * b, obs, acts);
      acts.pop_back();
    }
    obs.pop_back();
  }
  return total;
}

int model_horizon(const POMDP& m) {
  if (!m.horizon) throw DomainMismatch("FDVF routines need a finite-horizon model");
  return *m.horizon;
}

void check_tables(const FunctionTable& V, const FunctionTable& theta, int H) {
  if (V.kind != DomainKind::FuturePair) throw DomainMismatch("V must be a future-pair table");
  if (theta.kind != DomainKind::History) throw DomainMismatch("theta must be a history table");
  if (V.horizon != H || theta.horizon != H) throw DomainMismatch("table horizon differs from the data");
  if (V.n_obs != theta.n_obs || V.n_actions != theta.n_actions)
    throw DomainMismatch("V and theta disagree on alphabet sizes");
}

/// Per-(trajectory, step) indices and weights shared by all class members.
struct Prepared {
  int H = 0;
  std::size_t n = 0;
  std::vector<long> vcur, vnext, th;
  std::vector<double> mu, r, w;
};

Prepared prepare(const FdvfDomain& vd, const FdvfDomain& td, const D2Dataset& d, const MuSpec& mu,
                 const FdvfOptions& opt) {
  Prepared p;
  p.H = d.horizon;
  p.n = d.trajs.size();
  const int T = opt.truncation_T.value_or(0);
  if (opt.weights && opt.weights->size() != p.n) throw BadSpec("one importance weight per trajectory required");
  const std::size_t m = p.n * std::size_t(p.H);
  p.vcur.resize(m);
  p.vnext.resize(m);
  p.th.resize(m);
  p.mu.resize(m);
  p.r.resize(m);
  p.w.assign(m, 1.0);
  for (std::size_t i = 0; i < p.n; ++i) {
    const auto& t = d.trajs[i];
    if (t.length() != p.H) throw SchemaMismatch("trajectory length differs from the horizon");
    for (int h = 1; h <= p.H; ++h) {
      const std::size_t k = i * p.H + (h - 1);
      p.vcur[k] = vd.v_index(h, t.obs, t.acts);
      p.vnext[k] = h < p.H ? vd.v_index(h + 1, t.obs, t.acts) : -1;
      p.th[k] = td.theta_index(h, t.obs, t.acts);
      p.mu[k] = mu.mu(h, t.obs, t.acts, T);
      p.r[k] = t.rews[h - 1];
      if (opt.weights) p.w[k] = (*opt.weights)[i];
    }
  }
  return p;
}

Eigen::VectorXd cell_sums(const Eigen::VectorXd& V, const Prepared& p, long cells) {
  Eigen::VectorXd S = Eigen::VectorXd::Zero(cells);
  for (std::size_t k = 0; k < p.vcur.size(); ++k) {
    const double next = p.vnext[k] >= 0 ? V(p.vnext[k]) : 0.0;
    S(p.th[k]) += p.w[k] * (p.mu[k] * (p.r[k] + next) - V(p.vcur[k]));
  }
  return S;
}

Eigen::VectorXd cell_mass(const Prepared& p, long cells) {
  Eigen::VectorXd N = Eigen::VectorXd::Zero(cells);
  for (std::size_t k = 0; k < p.th.size(); ++k) N(p.th[k]) += p.w[k];
  return N;
}

double objective(const Eigen::VectorXd& theta, const Eigen::VectorXd& S, const Eigen::VectorXd& N, double n) {
  return (theta.dot(S) - 0.5 * theta.cwiseAbs2().dot(N)) / n;
}

void check_window(const FunctionTable& f, const FdvfOptions& opt) {
  if (opt.truncation_T && f.window > *opt.truncation_T)
    throw DomainMismatch("table window exceeds the truncation window");
}

}  // namespace

FdvfDomain::FdvfDomain(int H_, int n_obs_, int n_actions_, int window_)
    : H(H_), n_obs(n_obs_), n_actions(n_actions_), window(window_) {
  if (H < 1 || n_obs < 1 || n_actions < 1 || window < 0) throw BadSpec("invalid FDVF domain");
  const long oa = long(n_obs) * n_actions;
  v_offset.assign(H + 2, 0);
  theta_offset.assign(H + 2, 0);
  for (int h = 1; h <= H; ++h) {
    const long hist = ipow(oa, hist_pairs(h));
    v_offset[h + 1] = v_offset[h] + hist * ipow(oa, H - h + 1);
    theta_offset[h + 1] = theta_offset[h] + hist;
  }
}

FdvfDomain FdvfDomain::of(const FunctionTable& f) {
  FdvfDomain d(f.horizon, f.n_obs, f.n_actions, f.window);
  const long want = f.kind == DomainKind::FuturePair ? d.v_size() : d.theta_size();
  if (f.values.rows() != want || f.values.cols() != 1) throw DomainMismatch("table size does not match its domain");
  return d;
}

long FdvfDomain::hist_code(int h, const std::vector<int>& obs, const std::vector<int>& acts) const {
  long code = 0;
  for (int j = h - hist_pairs(h); j < h; ++j) code = code * n_obs * n_actions + obs[j - 1] * n_actions + acts[j - 1];
  return code;
}

long FdvfDomain::v_index(int h, const std::vector<int>& obs, const std::vector<int>& acts) const {
  long fut = 0;
  for (int j = h; j <= H; ++j) fut = fut * n_obs * n_actions + obs[j - 1] * n_actions + acts[j - 1];
  return v_offset[h] + hist_code(h, obs, acts) * ipow(long(n_obs) * n_actions, H - h + 1) + fut;
}

long FdvfDomain::theta_index(int h, const std::vector<int>& obs, const std::vector<int>& acts) const {
  return theta_offset[h] + hist_code(h, obs, acts);
}

FunctionTable fdvf_v_table(const FdvfDomain& d, const Eigen::VectorXd& values) {
  if (values.size() != d.v_size()) throw DomainMismatch("V values do not match the domain");
  FunctionTable f = FunctionTable::table(DomainKind::FuturePair, values);
  f.horizon = d.H;
  f.window = d.window;
  f.n_obs = d.n_obs;
  f.n_actions = d.n_actions;
  return f;
}

FunctionTable fdvf_theta_table(const FdvfDomain& d, const Eigen::VectorXd& values) {
  if (values.size() != d.theta_size()) throw DomainMismatch("theta values do not match the domain");
  FunctionTable f = FunctionTable::table(DomainKind::History, values);
  f.horizon = d.H;
  f.window = d.window;
  f.n_obs = d.n_obs;
  f.n_actions = d.n_actions;
  return f;
}

double MuSpec::mu(int h, const std::vector<int>& obs, const std::vector<int>& acts, int T) const {
  if (!model || !pi_e || !pi_b) throw BadSpec("mu needs a model and both policies");
  History t = tau_plus(obs, acts, h);
  Eigen::VectorXd b;
  if (T > 0) t = t.window(T);
  if (pi_e->needs_belief() || pi_b->needs_belief())
    b = T > 0 ? window_belief(*model, t) : Eigen::VectorXd(belief_of_history(*model, t));
  const int a = acts[h - 1];
  const double pb = pi_b->probs(t, b)(a);
  if (!(pb > 0)) throw SupportViolation("behaviour policy gives probability 0 to a logged action");
  return pi_e->probs(t, b)(a) / pb;
}

double MuSpec::max_mu(int H, int T) const {
  double best = 0;
  for_each_history(*model, *pi_b, H, [&](int h, const std::vector<int>& obs,
                                                          const std::vector<int>& acts, double,
                                                          const Eigen::VectorXd& prior) {
    const Eigen::VectorXd po = model->emission.transpose() * prior;
    std::vector<int> o2 = obs, a2 = acts;
    o2.push_back(0);
    a2.push_back(0);
    for (int o = 0; o < model->n_obs; ++o) {
      if (po(o) <= 0) continue;
      o2.back() = o;
      for (int a = 0; a < model->n_actions; ++a) {
        a2.back() = a;
        best = std::max(best, mu(h, o2, a2, T));
      }
    }
  });
  return best;
}

double fdvf_inner(const FunctionTable& V, const FunctionTable& theta, const D2Dataset& d, const MuSpec& mu,
                  const FdvfOptions& opt) {
  check_tables(V, theta, d.horizon);
  check_window(V, opt);
  check_window(theta, opt);
  if (d.trajs.empty()) throw BadSpec("dataset is empty");
  const FdvfDomain vd = FdvfDomain::of(V), td = FdvfDomain::of(theta);
  const Prepared p = prepare(vd, td, d, mu, opt);
  return objective(theta.values.col(0), cell_sums(V.values.col(0), p, td.theta_size()),
                   cell_mass(p, td.theta_size()), double(p.n));
}

EstimateResult fdvf_fit(const FunctionClass& Vclass, const FunctionClass& Theta, const D2Dataset& d,
                        const MuSpec& mu, const FdvfOptions& opt) {
  Vclass.validate();
  Theta.validate();
  if (d.trajs.empty()) throw BadSpec("dataset is empty");
  const FunctionTable& V0 = Vclass.members.front();
  const FunctionTable& T0 = Theta.members.front();
  check_tables(V0, T0, d.horizon);
  check_window(V0, opt);
  check_window(T0, opt);
  const FdvfDomain vd = FdvfDomain::of(V0), td = FdvfDomain::of(T0);
  const Prepared p = prepare(vd, td, d, mu, opt);
  const Eigen::VectorXd N = cell_mass(p, td.theta_size());

  EstimateResult out;
  out.mode = opt.truncation_T ? "truncated(T=" + std::to_string(*opt.truncation_T) + ")" : "full";
  out.n_used = p.n;
  out.losses.assign(Vclass.size(), 0.0);
  parallel_for(int(Vclass.size()), opt.workers, [&](int i) {
    const Eigen::VectorXd S = cell_sums(Vclass.members[i].values.col(0), p, td.theta_size());
    double best = 0;
    for (std::size_t j = 0; j < Theta.size(); ++j) {
      const double v = objective(Theta.members[j].values.col(0), S, N, double(p.n));
      if (j == 0 || v > best) best = v;
    }
    out.losses[i] = best;
  });
  for (std::size_t i = 1; i < out.losses.size(); ++i)
    if (out.losses[i] < out.losses[out.chosen_index]) out.chosen_index = i;
  out.inner = out.losses;
  out.empirical_loss = out.losses[out.chosen_index];
  out.J_hat = fdvf_estimate(Vclass.members[out.chosen_index], d);
  return out;
}

double fdvf_estimate(const FunctionTable& V, const D2Dataset& d) {
  if (d.trajs.empty()) throw BadSpec("dataset is empty");
  const FdvfDomain vd = FdvfDomain::of(V);
  std::vector<double> parts;
  constexpr std::size_t kShard = 4096;
  for (std::size_t lo = 0; lo < d.trajs.size(); lo += kShard) {
    double s = 0;
    for (std::size_t i = lo; i < std::min(d.trajs.size(), lo + kShard); ++i)
      s += V.values(vd.v_index(1, d.trajs[i].obs, d.trajs[i].acts), 0);
    parts.push_back(s);
  }
  return tree_sum(parts) / double(d.trajs.size());
}

double fdvf_estimate_exact(const FunctionTable& V, const POMDP& m, const Policy& pi_b, int H) {
  require_predict_first(m);
  const FdvfDomain vd = FdvfDomain::of(V);
  if (vd.H != H) throw DomainMismatch("V horizon differs");
  std::vector<int> obs, acts;
  double total = 0;
  walk_futures(m, pi_b, 1, H, m.d0, m.d0, obs, acts, [&](const std::vector<int>& o, const std::vector<int>& a,
                                                        double w) { total += w * V.values(vd.v_index(1, o, a), 0); });
  return total;
}

FdvfCells fdvf_population_cells(const FunctionTable& V, const FdvfDomain& td, const MuSpec& mu, int H) {
  require_predict_first(*mu.model);
  const POMDP& m = *mu.model;
  const FdvfDomain vd = FdvfDomain::of(V);
  if (vd.H != H || td.H != H) throw DomainMismatch("horizon mismatch");
  FdvfCells c{Eigen::VectorXd::Zero(td.theta_size()), Eigen::VectorXd::Zero(td.theta_size())};
  std::vector<int> obs, acts;
  std::vector<double> rbar;
  std::function<void(int, const Eigen::VectorXd&, double)> rec = [&](int h, const Eigen::VectorXd& prior,
                                                                      double prob) {
    if (h > H) {
      for (int k = 1; k <= H; ++k) {
        const double next = k < H ? V.values(vd.v_index(k + 1, obs, acts), 0) : 0.0;
        const double X = mu.mu(k, obs, acts) * (rbar[k - 1] + next) - V.values(vd.v_index(k, obs, acts), 0);
        const long cell = td.theta_index(k, obs, acts);
        c.S(cell) += prob * X;
        c.N(cell) += prob;
      }
      return;
    }
    const Eigen::VectorXd po = m.emission.transpose() * prior;
    for (int o = 0; o < m.n_obs; ++o) {
      if (po(o) <= 0) continue;
      const Eigen::VectorXd b = m.emission.col(o).cwiseProduct(prior) / po(o);
      obs.push_back(o);
      const Eigen::VectorXd pa = policy_probs(*mu.pi_b, tau_plus(obs, acts, h), b);
      for (int a = 0; a < m.n_actions; ++a) {
        if (pa(a) <= 0) continue;
        acts.push_back(a);
        rbar.push_back(b.dot(m.reward.col(a)));
        rec(h + 1, m.transition[a].transpose() * b, prob * po(o) * pa(a));
        rbar.pop_back();
        acts.pop_back();
      }
      obs.pop_back();
    }
  };
  rec(1, m.d0, 1.0);
  return c;
}

double fdvf_population_inner(const FunctionTable& V, const FunctionTable& theta, const MuSpec& mu, int H) {
  const FdvfDomain td = FdvfDomain::of(theta);
  const FdvfCells c = fdvf_population_cells(V, td, mu, H);
  return objective(theta.values.col(0), c.S, c.N, 1.0);
}

double fdvf_population_max(const FunctionTable& V, const FdvfDomain& td, const MuSpec& mu, int H) {
  const FdvfCells c = fdvf_population_cells(V, td, mu, H);
  double total = 0;
  for (long i = 0; i < c.S.size(); ++i)
    if (c.N(i) > 0) total += c.S(i) * c.S(i) / (2 * c.N(i));
  return total;
}

std::vector<ResidualEntry> bellman_residual_H(const POMDP& m, const Policy& pi_e, const Policy& pi_b,
                                              const FunctionTable& V) {
  require_predict_first(m);
  const FdvfDomain vd = FdvfDomain::of(V);
  const int H = vd.H;
  // G(h, τ_h, prior) = E_{π_b}[V(f_h) | τ_h]
  auto G = [&](int h, std::vector<int> obs, std::vector<int> acts, const Eigen::VectorXd& prior) {
    if (h > H) return 0.0;
    double total = 0;
    walk_futures(m, pi_b, h, H, prior, prior, obs, acts,
                 [&](const std::vector<int>& o, const std::vector<int>& a, double w) {
                   total += w * V.values(vd.v_index(h, o, a), 0);
                 });
    return total;
  };
  std::vector<ResidualEntry> out;
  for_each_history(m, pi_b, H, [&](int h, const std::vector<int>& obs, const std::vector<int>& acts, double prob,
                                   const Eigen::VectorXd& prior) {
    ResidualEntry e;
    e.h = h;
    e.obs = obs;
    e.acts = acts;
    e.prob = prob;
    double first = 0;
    const Eigen::VectorXd po = m.emission.transpose() * prior;
    std::vector<int> o2 = obs, a2 = acts;
    for (int o = 0; o < m.n_obs; ++o) {
      if (po(o) <= 0) continue;
      const Eigen::VectorXd b = m.emission.col(o).cwiseProduct(prior) / po(o);
      o2.push_back(o);
      const Eigen::VectorXd pa = policy_probs(pi_e, tau_plus(o2, a2, h), b);
      for (int a = 0; a < m.n_actions; ++a) {
        if (pa(a) <= 0) continue;
        a2.push_back(a);
        first += po(o) * pa(a) * (b.dot(m.reward.col(a)) + G(h + 1, o2, a2, m.transition[a].transpose() * b));
        a2.pop_back();
      }
      o2.pop_back();
    }
    e.value = first - G(h, obs, acts, prior);
    out.push_back(std::move(e));
  });
  return out;
}

double half_mean_square(const std::vector<ResidualEntry>& res) {
  double total = 0;
  for (const auto& e : res) total += e.prob * e.value * e.value;
  return 0.5 * total;
}

FunctionTable residual_theta_table(const std::vector<ResidualEntry>& res, const FdvfDomain& d, double* gap) {
  Eigen::VectorXd vals = Eigen::VectorXd::Zero(d.theta_size());
  std::vector<char> seen(std::size_t(d.theta_size()), 0);
  double worst = 0;
  for (const auto& e : res) {
    const long c = d.theta_index(e.h, e.obs, e.acts);
    if (seen[c]) {
      worst = std::max(worst, std::abs(vals(c) - e.value));
    } else {
      vals(c) = e.value;
      seen[c] = 1;
    }
  }
  if (gap) *gap = worst;
  return fdvf_theta_table(d, vals);
}

double importance_weight_wphiT(const POMDP& m, const ShortMemoryPOMDP& sm, const Policy& pi_b,
                               const Policy& pi_b_T, const D2Trajectory& traj) {
  const int H = traj.length();
  const int T = sm.T;
  double w = 1.0;
  Eigen::VectorXd b_prev;
  for (int h = 1; h <= H; ++h) {
    const History full = tau_plus(traj.obs, traj.acts, h);
    const History win = full.window(T);
    if (h > 1) {
      const int a = traj.acts[h - 2];
      const double p_true = obs_predictive(m, b_prev, a)(traj.obs[h - 1]);
      const History prev_win = tau_plus(traj.obs, traj.acts, h - 1).window(T);
      const double p_short =
          sm.model.transition[a](sm.index.at(prev_win.key()), sm.index.at(win.key()));
      if (!(p_true > 0)) throw SupportViolation("observation has probability 0 under the true model");
      w *= p_short / p_true;
    }
    const Eigen::VectorXd b = belief_of_history(m, full);
    const Eigen::VectorXd bw = pi_b_T.needs_belief() ? window_belief(m, win) : Eigen::VectorXd();
    const int a = traj.acts[h - 1];
    const double den = pi_b.probs(full, b)(a);
    if (!(den > 0)) throw SupportViolation("behaviour policy gives probability 0 to a logged action");
    w *= pi_b_T.probs(win, bw)(a) / den;
    b_prev = b;
  }
  return w;
}

FdvfSolution solve_fdvf(const POMDP& m, const Policy& pi_e, const Policy& pi_b, int window) {
  require_predict_first(m);
  const int H = model_horizon(m);
  const FdvfDomain vd(H, m.n_obs, m.n_actions, window);
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  double J = 0;
  for_each_history(m, pi_b, H, [&](int h, const std::vector<int>& obs, const std::vector<int>& acts, double,
                                   const Eigen::VectorXd& prior) {
    for (int s = 0; s < m.n_states; ++s) {
      if (prior(s) <= 0) continue;
      const Eigen::VectorXd e = Eigen::VectorXd::Unit(m.n_states, s);
      Eigen::VectorXd row = Eigen::VectorXd::Zero(vd.v_size());
      std::vector<int> o = obs, a = acts;
      walk_futures(m, pi_b, h, H, e, prior, o, a, [&](const std::vector<int>& oo, const std::vector<int>& aa,
                                                      double w) { row(vd.v_index(h, oo, aa)) += w; });
      o = obs;
      a = acts;
      const double vs = future_reward(m, pi_e, h, H, e, prior, o, a);
      if (h == 1) J += m.d0(s) * vs;
      rows.push_back(std::move(row));
      rhs.push_back(vs);
    }
  });
  Eigen::MatrixXd A(rows.size(), vd.v_size());
  Eigen::VectorXd y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    A.row(i) = rows[i].transpose();
    y(i) = rhs[i];
  }
  const Eigen::VectorXd x = A.completeOrthogonalDecomposition().solve(y);
  FdvfSolution sol;
  sol.V = fdvf_v_table(vd, x);
  sol.residual = (A * x - y).cwiseAbs().maxCoeff();
  sol.J = J;
  return sol;
}

double fdvf_default_c(double C) { return 1406.0 + std::sqrt(80707.0 + 29.0 * C); }

double compute_bound_fdvf(double ratio, double n, double delta, int H, double C_V, double C_mu, double V_card,
                          double Theta_card, double L_E, double L_phi, double eps, double c) {
  const double stat = c * H * C_V * C_V * C_mu / n * std::log(V_card * Theta_card / delta);
  return L_phi * eps + std::sqrt(double(H)) * ratio * std::sqrt(stat + L_E * eps);
}

double fdvf_L_E(int H, double C_mu, double L_pi, double V_inf, double Theta_inf, double min_pi_b,
                double min_p_obs) {
  const double vt = V_inf * Theta_inf;
  const double policy_floor = L_pi > 0 ? min_pi_b / L_pi : std::numeric_limits<double>::infinity();
  return 3 * (2 * H * (C_mu + 1) * L_pi * vt / min_pi_b + H * C_mu * vt +
              3.0 * H * H * std::max(C_mu * vt, 0.5 * Theta_inf * Theta_inf) / std::min(min_p_obs, policy_floor));
}

double fdvf_L_E_tight(int H, double C_mu, double L_pi, double V_inf, double Theta_inf, double min_pi_b, double c1,
                      double c2) {
  const double vt = V_inf * Theta_inf;
  return 3 * (H * L_pi * (c1 * (C_mu + 1) * vt + c2 * H * std::max(C_mu * vt, 0.5 * Theta_inf * Theta_inf)) /
                  min_pi_b +
              H * C_mu * vt);
}

double fdvf_L_phi_tight(double Rmax, int H, double L_pi, double V_inf) {
  return Rmax * H * L_pi + Rmax * H * H * L_pi + V_inf;
}

}  // namespace bope
