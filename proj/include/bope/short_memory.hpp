#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "bope/abstraction.hpp"

namespace bope {

/// POMDP whose latent states are windows of at most T observations, with one-hot emission on the
/// window's last observation, r′(w,a) = r(𝐛(w),a) and T′(trunc(w,a,o) | w,a) = P(o | 𝐛(w), a).
struct ShortMemoryPOMDP {
  POMDP model;
  std::vector<History> windows;
  std::unordered_map<std::string, int> index;
  int T = 1;
};

ShortMemoryPOMDP build_short_memory_pomdp(const POMDP& m, int T, std::size_t state_cap = 200000);

struct IsomorphismReport {
  bool bijection = false;
  bool one_hot = false;
  int abstract_states = 0;
  int matched_states = 0;
  double max_reward_gap = 0;
  double max_transition_gap = 0;
  std::string failure;
};

/// Compares the belief MDP of the short-memory POMDP with the φ_T-abstract MDP of the original
/// model on histories of at most H observations.
IsomorphismReport check_short_memory_isomorphism(const POMDP& m, int T, int H);

}  // namespace bope
