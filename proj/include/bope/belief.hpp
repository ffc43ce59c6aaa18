#pragma once

#include <Eigen/Dense>

#include "bope/history.hpp"
#include "bope/pomdp.hpp"

namespace bope {

template <typename Scalar>
using BeliefVec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// ‖x − y‖₁
template <typename A, typename B>
auto l1(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  return (x - y).cwiseAbs().sum();
}

/// P(o₁) = Σ_s d0(s)Ω(o₁|s)
template <typename Scalar>
BeliefVec<Scalar> initial_obs_dist(const TabularPOMDP<Scalar>& m) {
  return m.emission.transpose() * m.d0;
}

/// b₁ ∝ d0 ⊙ Ω(o₁|·)
template <typename Scalar>
BeliefVec<Scalar> initial_belief(const TabularPOMDP<Scalar>& m, int o1) {
  BeliefVec<Scalar> b = m.d0.cwiseProduct(m.emission.col(o1));
  const Scalar z = b.sum();
  if (!(z > 0)) throw UnreachableObservation("initial observation " + std::to_string(o1));
  return b / z;
}

/// P(o | b, a) as a vector over observations.
template <typename Scalar, typename Derived>
BeliefVec<Scalar> obs_predictive(const TabularPOMDP<Scalar>& m, const Eigen::MatrixBase<Derived>& b,
                                 int a, UpdateOrder order) {
  if (order == UpdateOrder::PredictFirst)
    return m.emission.transpose() * (m.transition[a].transpose() * b);
  return m.emission.transpose() * b;
}

template <typename Scalar, typename Derived>
BeliefVec<Scalar> obs_predictive(const TabularPOMDP<Scalar>& m, const Eigen::MatrixBase<Derived>& b,
                                 int a) {
  return obs_predictive(m, b, a, m.order);
}

/// Unnormalised successor; its sum is P(o | b, a).
template <typename Scalar, typename Derived>
BeliefVec<Scalar> belief_update_unnormalized(const TabularPOMDP<Scalar>& m,
                                             const Eigen::MatrixBase<Derived>& b, int a, int o,
                                             UpdateOrder order) {
  if (order == UpdateOrder::PredictFirst)
    return m.emission.col(o).cwiseProduct(m.transition[a].transpose() * b);
  return m.transition[a].transpose() * b.cwiseProduct(m.emission.col(o));
}

/// b^{o,a}; throws UnreachableObservation when P(o|b,a) = 0.
template <typename Scalar, typename Derived>
BeliefVec<Scalar> belief_update(const TabularPOMDP<Scalar>& m, const Eigen::MatrixBase<Derived>& b,
                                int a, int o, UpdateOrder order) {
  BeliefVec<Scalar> u = belief_update_unnormalized(m, b, a, o, order);
  const Scalar z = u.sum();
  if (!(z > 0))
    throw UnreachableObservation("P(o=" + std::to_string(o) + " | b, a=" + std::to_string(a) +
                                 ") = 0");
  return u / z;
}

template <typename Scalar, typename Derived>
BeliefVec<Scalar> belief_update(const TabularPOMDP<Scalar>& m, const Eigen::MatrixBase<Derived>& b,
                                int a, int o) {
  return belief_update(m, b, a, o, m.order);
}

/// 𝐛(τ⁺): fold of belief_update from the o₁-posterior.
template <typename Scalar>
BeliefVec<Scalar> belief_of_history(const TabularPOMDP<Scalar>& m, const History& tau,
                                    UpdateOrder order) {
  if (!tau.ends_with_obs()) throw DomainMismatch("belief_of_history needs a history ending in o");
  BeliefVec<Scalar> b = initial_belief(m, tau.seq[0]);
  for (std::size_t i = 1; i + 1 < tau.seq.size(); i += 2)
    b = belief_update(m, b, tau.seq[i], tau.seq[i + 1], order);
  return b;
}

template <typename Scalar>
BeliefVec<Scalar> belief_of_history(const TabularPOMDP<Scalar>& m, const History& tau) {
  return belief_of_history(m, tau, m.order);
}

/// Pr(s_h | τ_h) for τ_h = (τ⁺_{h−1}, a_{h−1}); predict-first timing only.
template <typename Scalar>
BeliefVec<Scalar> state_prior_of_history(const TabularPOMDP<Scalar>& m, const History& tau) {
  if (m.order != UpdateOrder::PredictFirst)
    throw DomainMismatch("state prior of an action-terminated history needs predict-first timing");
  if (tau.empty()) return m.d0;
  if (tau.ends_with_obs()) throw DomainMismatch("expected a history ending in an action");
  History plus(std::vector<int>(tau.seq.begin(), tau.seq.end() - 1));
  BeliefVec<Scalar> b = belief_of_history(m, plus);
  return m.transition[tau.seq.back()].transpose() * b;
}

/// r(b,a) = ⟨b, r(·,a)⟩
template <typename Scalar, typename Derived>
Scalar reward_of_belief(const TabularPOMDP<Scalar>& m, const Eigen::MatrixBase<Derived>& b, int a) {
  return b.dot(m.reward.col(a));
}

}  // namespace bope
