#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bope/pomdp.hpp"

namespace bope {

struct LemmaVerdict {
  std::string lemma_id;
  std::size_t trials = 0;
  double worst_ratio = 0;     // largest observed lhs/rhs-scale ratio
  double max_violation = 0;   // max(0, lhs − rhs) over all checks
  double tolerance = 1e-9;
  bool pass = false;          // max_violation ≤ tolerance
  std::vector<std::string> log;

  nlohmann::json to_json() const;
};

struct LemmaOptions {
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  double tol = 1e-9;
  int max_states = 4, max_obs = 4, max_actions = 4;
  double gamma = 0.8;
  int vi_depth = 30;          // optimal-value-lipschitz
  std::size_t vi_models = 20; // optimal-value-lipschitz, replaces trials
  std::size_t pairs = 200;    // optimal-value-lipschitz, per model
  int pair_depth = 4;         // depth of the reachable set pairs are drawn from
  std::vector<double> xi_fixtures{0.25, 0.1, 0.05, 0.01};
  const POMDP* model = nullptr;  // draws beliefs from this model instead of generating one
};

const std::vector<std::string>& registered_lemmas();

/// Randomised plus fixture checks of one registered inequality; throws UnknownLemma otherwise.
LemmaVerdict verify_lemma(const std::string& lemma_id, const LemmaOptions& opt = {});

/// The counter-example at ξ: b₁ = 𝐛(o₂), b₂ = 𝐛(o₄), both updated on (a, o₃).
struct CounterExampleResult {
  Eigen::VectorXd b1, b2, next1, next2;
  double ratio = 0;  // ‖next1 − next2‖₁ / ‖b1 − b2‖₁
  double expected_ratio = 0;  // E_{o∼P(·|b1,a)} version
};
CounterExampleResult counter_example_ratio(double xi);

/// E_{o∼P(·|b1,a)}‖b1^{o,a} − b2^{o,a}‖₁; an update that is undefined for b2 counts as distance 2.
double expected_update_distance(const POMDP& m, const Eigen::VectorXd& b1, const Eigen::VectorXd& b2, int a,
                                UpdateOrder order);

}  // namespace bope
