#pragma once

#include <vector>

#include "bope/pomdp.hpp"

namespace bope {

/// Piecewise-linear convex value V(b) = max_α ⟨α, b⟩.
struct AlphaSet {
  std::vector<Eigen::VectorXd> alphas;
  std::vector<int> actions;
  double prune_error = 0;  // certified bound on max_b |V(b) − V_depth(b)| from pruning tolerance

  double value(const Eigen::VectorXd& b) const;
  std::size_t size() const { return alphas.size(); }
};

/// Depth-step optimal value with incremental pruning; rewards of steps 1..depth count.
/// Each prune drops only vectors improving the envelope by at most prune_tol, so the result is
/// within prune_error of the exact value.
AlphaSet optimal_value_alpha(const POMDP& m, int depth, std::size_t max_vectors = 50000,
                             double prune_tol = 1e-10);

/// Removes vectors that improve max_α ⟨α, b⟩ by at most tol at every belief. Vectors that win at
/// a fixed set of probe beliefs are kept without an LP.
std::vector<Eigen::VectorXd> prune_alphas(const std::vector<Eigen::VectorXd>& W, double tol = 1e-10);

/// max_{b∈Δ} min_u ⟨v − u, b⟩ and its maximiser; +∞ when `others` is empty.
double witness_lp(const Eigen::VectorXd& v, const std::vector<Eigen::VectorXd>& others,
                  Eigen::VectorXd* witness = nullptr);

}  // namespace bope
