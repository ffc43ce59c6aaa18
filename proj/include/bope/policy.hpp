#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>

#include "bope/history.hpp"
#include "bope/pomdp.hpp"

namespace bope {

/// Stochastic policy over histories ending in an observation.
struct Policy {
  enum class Kind { Constant, Memoryless, TruncatedMemory, HistoryTable, BeliefLinear };

  Kind kind = Kind::Constant;
  int n_actions = 0;
  int window = 1;                                // TruncatedMemory
  Eigen::VectorXd constant;                      // Constant
  Eigen::MatrixXd by_obs;                        // Memoryless, |O|x|A|
  std::map<std::string, Eigen::VectorXd> table;  // TruncatedMemory / HistoryTable
  Eigen::VectorXd fallback;                      // for keys missing from table
  Eigen::MatrixXd K;                             // BeliefLinear, |S|x|A|, π(b) = Kᵀb
  std::optional<double> declared_L_pi;

  static Policy uniform(int n_actions);
  static Policy constant_dist(const Eigen::VectorXd& p);
  static Policy memoryless(const Eigen::MatrixXd& by_obs);
  static Policy truncated(int T, std::map<std::string, Eigen::VectorXd> table,
                          const Eigen::VectorXd& fallback);
  static Policy history_table(std::map<std::string, Eigen::VectorXd> table,
                              const Eigen::VectorXd& fallback);
  /// Declared L_π = ½·max_{s,s′}‖K_s − K_{s′}‖₁.
  static Policy belief_linear(const Eigen::MatrixXd& K);

  bool needs_belief() const { return kind == Kind::BeliefLinear; }
  /// Number of trailing observations the output depends on; −1 if unbounded.
  int memory() const;

  Eigen::VectorXd probs(const History& tau_plus, const Eigen::VectorXd& belief) const;
  double prob(const History& tau_plus, const Eigen::VectorXd& belief, int a) const {
    return probs(tau_plus, belief)(a);
  }

  void validate(double tol = 1e-12) const;
  /// Stable digest of the policy contents.
  std::string hash() const;
};

const char* to_string(Policy::Kind k);

}  // namespace bope
