#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "bope/abstraction.hpp"

namespace bope {

using NodeValue = std::function<double(int node)>;
using NodeQ = std::function<double(int node, int action)>;

/// Probe suprema; all constants are lower bounds on the true ones.
struct StabilityReport {
  double L_pi_hat = 0;
  double L_V_hat = 0;
  double L_Q_hat = 0;
  double update_ratio_max = 0;  // max_{a,o} ‖b₁^{o,a} − b₂^{o,a}‖₁ / ‖b₁ − b₂‖₁
  std::vector<double> eps_grid;
  std::vector<int> T0_curve, T1_curve, T2_curve;  // −1 when no window up to depth achieves ε
  std::vector<double> belief_radius_by_T;         // index T−1
  std::vector<double> policy_radius_by_T;
  std::vector<double> value_radius_by_T;
  std::size_t sample_count = 0;
  bool lower_bound = true;
};

/// Pairs are all node pairs when their count is at most `probes`, otherwise `probes` random pairs.
/// Window curves use exact group diameters for T = 1..depth. V and Q may be empty.
StabilityReport measure_stability(const POMDP& m, const BeliefGraph& g, const Policy& pi,
                                  const NodeValue& V, const NodeQ& Q, std::size_t probes,
                                  std::uint64_t seed, const std::vector<double>& eps_grid = {});

/// Max intra-window belief diameter for T = 1..max_T (index T−1).
std::vector<double> forgetting_radii(const BeliefGraph& g, int max_T);

/// Smallest T (1-based) whose radius is ≤ eps, or −1.
int minimal_window(const std::vector<double>& radius_by_T, double eps);

/// L_φ^[1] = ((L_π+1)Rmax + 2L_V)/(1−γ) + (γRmax·L_π + Rmax)/(1−γ)²; a horizon replaces 1/(1−γ) by H.
double compute_Lphi1(double L_pi, double L_V, double Rmax, double gamma,
                     std::optional<int> horizon = std::nullopt);

}  // namespace bope
