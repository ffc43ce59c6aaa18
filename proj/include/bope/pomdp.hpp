#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "bope/errors.hpp"

namespace bope {

/// Timing of the belief filter.
///
/// PredictFirst: s_h emits o_h, then transitions; b' ∝ Ω(o|·) ⊙ Tᵀb.
/// UpdateFirst: condition the current state on o, then transition; b' = Tᵀ(b ⊙ Ω(o|·)) / norm.
enum class UpdateOrder { PredictFirst, UpdateFirst };

inline const char* to_string(UpdateOrder o) {
  return o == UpdateOrder::PredictFirst ? "predict-first" : "update-first";
}

/// Finite POMDP with deterministic rewards r(s,a) in [0, rmax].
template <typename Scalar = double>
struct TabularPOMDP {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  int n_states = 0;
  int n_actions = 0;
  int n_obs = 0;
  std::vector<Matrix> transition;  // per action, |S|x|S|, row s is T(·|s,a)
  Matrix emission;                 // |S|x|O|
  Matrix reward;                   // |S|x|A|
  Scalar rmax = Scalar(1);
  Vector d0;
  Scalar gamma = Scalar(0.9);
  std::optional<int> horizon;
  UpdateOrder order = UpdateOrder::PredictFirst;

  bool finite_horizon() const { return horizon.has_value(); }

  /// Effective horizon factor: 1/(1−γ) or H.
  Scalar horizon_factor() const {
    return horizon ? Scalar(*horizon) : Scalar(1) / (Scalar(1) - gamma);
  }
};

using POMDP = TabularPOMDP<double>;

namespace detail {
template <typename Derived>
void check_row(const Eigen::MatrixBase<Derived>& row, double tol, const std::string& what) {
  using std::abs;
  if ((row.array() < 0).any())
    throw NonStochasticRow(what + " has a negative entry");
  if (abs(double(row.sum()) - 1.0) > tol)
    throw NonStochasticRow(what + " sums to " + std::to_string(double(row.sum())));
}
}  // namespace detail

/// Throws unless every invariant of the model holds.
template <typename Scalar>
const TabularPOMDP<Scalar>& validate(const TabularPOMDP<Scalar>& m, double tol = 1e-12) {
  const int S = m.n_states, A = m.n_actions, O = m.n_obs;
  if (S <= 0 || A <= 0 || O <= 0) throw BadSpec("empty state, action or observation space");
  if (int(m.transition.size()) != A) throw BadSpec("transition must have one matrix per action");
  for (int a = 0; a < A; ++a) {
    if (m.transition[a].rows() != S || m.transition[a].cols() != S)
      throw BadSpec("transition matrix has wrong shape");
    for (int s = 0; s < S; ++s)
      detail::check_row(m.transition[a].row(s), tol,
                        "transition(s=" + std::to_string(s) + ",a=" + std::to_string(a) + ")");
  }
  if (m.emission.rows() != S || m.emission.cols() != O) throw BadSpec("emission has wrong shape");
  for (int s = 0; s < S; ++s)
    detail::check_row(m.emission.row(s), tol, "emission(s=" + std::to_string(s) + ")");
  if (m.d0.size() != S) throw BadSpec("d0 has wrong size");
  detail::check_row(m.d0.transpose(), tol, "d0");
  if (m.reward.rows() != S || m.reward.cols() != A) throw BadSpec("reward has wrong shape");
  if (!(m.rmax >= 0)) throw RewardOutOfRange("rmax must be nonnegative");
  if ((m.reward.array() < 0).any() || (m.reward.array() > m.rmax).any())
    throw RewardOutOfRange("reward outside [0, rmax]");
  const bool discounted = m.gamma >= 0 && m.gamma < 1;
  if (m.horizon) {
    if (*m.horizon < 1) throw BadDiscount("horizon must be >= 1");
    if (m.gamma != Scalar(1)) throw BadDiscount("finite-horizon models use gamma = 1");
  } else if (!discounted) {
    throw BadDiscount("gamma must lie in [0,1) when no horizon is set");
  }
  return m;
}

}  // namespace bope
