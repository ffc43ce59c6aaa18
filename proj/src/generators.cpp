#include "bope/generators.hpp"

#include <functional>

#include "bope/rng.hpp"

namespace bope {

namespace {

POMDP empty_model(const ModelShape& sh) {
  POMDP m;
  m.n_states = sh.n_states;
  m.n_actions = sh.n_actions;
  m.n_obs = sh.n_obs;
  m.rmax = sh.rmax;
  if (sh.horizon) {
    m.horizon = sh.horizon;
    m.gamma = 1.0;
  } else {
    m.gamma = sh.gamma;
  }
  m.transition.assign(sh.n_actions, Eigen::MatrixXd::Zero(sh.n_states, sh.n_states));
  m.emission = Eigen::MatrixXd::Zero(sh.n_states, sh.n_obs);
  m.reward = Eigen::MatrixXd::Zero(sh.n_states, sh.n_actions);
  return m;
}

template <typename Rng>
Eigen::MatrixXd stochastic_matrix(Rng& rng, int rows, int cols, double alpha) {
  Eigen::MatrixXd M(rows, cols);
  for (int r = 0; r < rows; ++r) M.row(r) = sample_dirichlet(rng, cols, alpha).transpose();
  return M;
}

template <typename Rng>
Eigen::MatrixXd uniform_rewards(Rng& rng, int S, int A, double rmax) {
  std::uniform_real_distribution<double> u(0.0, rmax);
  Eigen::MatrixXd R(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) R(s, a) = u(rng);
  return R;
}

}  // namespace

POMDP random_dense(const ModelShape& sh, std::uint64_t seed, double alpha) {
  auto rng = make_stream(seed, named_stream("model"));
  POMDP m = empty_model(sh);
  for (int a = 0; a < sh.n_actions; ++a) m.transition[a] = stochastic_matrix(rng, sh.n_states, sh.n_states, alpha);
  m.emission = stochastic_matrix(rng, sh.n_states, sh.n_obs, alpha);
  m.reward = uniform_rewards(rng, sh.n_states, sh.n_actions, sh.rmax);
  m.d0 = sample_dirichlet(rng, sh.n_states, alpha);
  return validate(m, 1e-10);
}

POMDP revealing(const ModelShape& shape, int obs_per_state, std::uint64_t seed) {
  ModelShape sh = shape;
  sh.n_obs = sh.n_states * obs_per_state;
  auto rng = make_stream(seed, named_stream("model"));
  POMDP m = empty_model(sh);
  for (int a = 0; a < sh.n_actions; ++a) m.transition[a] = stochastic_matrix(rng, sh.n_states, sh.n_states, 1.0);
  for (int s = 0; s < sh.n_states; ++s)
    m.emission.block(s, s * obs_per_state, 1, obs_per_state) =
        sample_dirichlet(rng, obs_per_state, 1.0).transpose();
  m.reward = uniform_rewards(rng, sh.n_states, sh.n_actions, sh.rmax);
  m.d0 = sample_dirichlet(rng, sh.n_states, 1.0);
  return validate(m, 1e-10);
}

POMDP counter_example(double xi, double gamma) {
  ModelShape sh{2, 1, 4, gamma, std::nullopt, 1.0};
  POMDP m = empty_model(sh);
  m.transition[0] = Eigen::MatrixXd::Identity(2, 2);
  m.emission << 0.5, 0.0, 0.5 - xi, xi,
                0.0, 0.5, xi, 0.5 - xi;
  m.reward << 1.0, 0.0;
  m.d0 = Eigen::Vector2d(0.5, 0.5);
  return validate(m);
}

POMDP low_rank(const ModelShape& sh, int rank, std::uint64_t seed) {
  auto rng = make_stream(seed, named_stream("model"));
  POMDP m = empty_model(sh);
  const Eigen::MatrixXd B = stochastic_matrix(rng, rank, sh.n_states, 1.0);
  for (int a = 0; a < sh.n_actions; ++a) {
    const Eigen::MatrixXd U = stochastic_matrix(rng, sh.n_states, rank, 1.0);
    m.transition[a] = U * B;
  }
  m.emission = stochastic_matrix(rng, sh.n_states, sh.n_obs, 1.0);
  m.reward = uniform_rewards(rng, sh.n_states, sh.n_actions, sh.rmax);
  m.d0 = sample_dirichlet(rng, sh.n_states, 1.0);
  return validate(m, 1e-10);
}

POMDP fast_forgetting(const ModelShape& sh, double lambda, std::uint64_t seed) {
  auto rng = make_stream(seed, named_stream("model"));
  POMDP m = empty_model(sh);
  const Eigen::VectorXd q = sample_dirichlet(rng, sh.n_states, 1.0);
  for (int a = 0; a < sh.n_actions; ++a)
    m.transition[a] = lambda * stochastic_matrix(rng, sh.n_states, sh.n_states, 1.0) +
                      (1 - lambda) * Eigen::VectorXd::Ones(sh.n_states) * q.transpose();
  m.emission = stochastic_matrix(rng, sh.n_states, sh.n_obs, 1.0);
  m.reward = uniform_rewards(rng, sh.n_states, sh.n_actions, sh.rmax);
  m.d0 = sample_dirichlet(rng, sh.n_states, 1.0);
  return validate(m, 1e-10);
}

POMDP reset_dynamics(const ModelShape& sh, std::uint64_t seed) {
  auto rng = make_stream(seed, named_stream("model"));
  POMDP m = empty_model(sh);
  for (int a = 0; a < sh.n_actions; ++a) {
    const Eigen::VectorXd p = sample_dirichlet(rng, sh.n_states, 1.0);
    m.transition[a] = Eigen::VectorXd::Ones(sh.n_states) * p.transpose();
  }
  m.emission = stochastic_matrix(rng, sh.n_states, sh.n_obs, 1.0);
  m.reward = uniform_rewards(rng, sh.n_states, sh.n_actions, sh.rmax);
  m.d0 = sample_dirichlet(rng, sh.n_states, 1.0);
  return validate(m, 1e-10);
}

POMDP constant_chain(double r, double gamma, double rmax) {
  ModelShape sh{1, 1, 1, gamma, std::nullopt, rmax};
  POMDP m = empty_model(sh);
  m.transition[0](0, 0) = 1.0;
  m.emission(0, 0) = 1.0;
  m.reward(0, 0) = r;
  m.d0 = Eigen::VectorXd::Ones(1);
  return validate(m);
}

ExplicitMDP<double> random_explicit_mdp(int S, int A, double gamma, std::uint64_t seed) {
  auto rng = make_stream(seed, named_stream("mdp"));
  ExplicitMDP<double> m;
  m.n_states = S;
  m.n_actions = A;
  m.gamma = gamma;
  for (int a = 0; a < A; ++a) m.P.push_back(stochastic_matrix(rng, S, S, 1.0));
  m.r = uniform_rewards(rng, S, A, 1.0);
  m.d0 = sample_dirichlet(rng, S, 1.0);
  return m;
}

Eigen::MatrixXd random_policy_matrix(int S, int A, std::uint64_t seed) {
  auto rng = make_stream(seed, named_stream("policy"));
  return stochastic_matrix(rng, S, A, 1.0);
}

namespace {
template <typename Rng>
Eigen::VectorXd floored(Rng& rng, int n, double min_prob) {
  return Eigen::VectorXd::Constant(n, min_prob) + (1.0 - n * min_prob) * sample_dirichlet(rng, n, 1.0);
}
}  // namespace

Policy random_memoryless(int n_obs, int n_actions, std::uint64_t seed, double min_prob) {
  auto rng = make_stream(seed, named_stream("policy"));
  Eigen::MatrixXd P(n_obs, n_actions);
  for (int o = 0; o < n_obs; ++o) P.row(o) = floored(rng, n_actions, min_prob).transpose();
  return Policy::memoryless(P);
}

Policy random_history_policy(const POMDP& m, int depth, std::uint64_t seed, double min_prob) {
  auto rng = make_stream(seed, named_stream("policy"));
  std::map<std::string, Eigen::VectorXd> table;
  std::function<void(const History&)> rec = [&](const History& h) {
    table[h.key()] = floored(rng, m.n_actions, min_prob);
    if (h.h() >= depth) return;
    for (int a = 0; a < m.n_actions; ++a)
      for (int o = 0; o < m.n_obs; ++o) rec(h.extended(a, o));
  };
  for (int o = 0; o < m.n_obs; ++o) rec(History({o}));
  return Policy::history_table(std::move(table), Policy::uniform(m.n_actions).constant);
}

Policy random_truncated_policy(const POMDP& m, int T, std::uint64_t seed, double min_prob) {
  if (T < 1) throw BadSpec("window must be >= 1");
  auto rng = make_stream(seed, named_stream("policy"));
  std::map<std::string, Eigen::VectorXd> table;
  std::function<void(const History&)> rec = [&](const History& h) {
    table[h.key()] = floored(rng, m.n_actions, min_prob);
    if (h.h() >= T) return;
    for (int a = 0; a < m.n_actions; ++a)
      for (int o = 0; o < m.n_obs; ++o) rec(h.extended(a, o));
  };
  for (int o = 0; o < m.n_obs; ++o) rec(History({o}));
  return Policy::truncated(T, std::move(table), Policy::uniform(m.n_actions).constant);
}

Policy random_belief_linear(int n_states, int n_actions, std::uint64_t seed, double alpha) {
  auto rng = make_stream(seed, named_stream("policy"));
  return Policy::belief_linear(stochastic_matrix(rng, n_states, n_actions, alpha));
}

}  // namespace bope
