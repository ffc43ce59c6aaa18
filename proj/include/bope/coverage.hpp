#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "bope/abstraction.hpp"

namespace bope {

struct CoverageReport {
  double linf_fine = 0, linf_coarse = 0;
  double chi2_fine = 0, chi2_coarse = 0;  // E[(ratio)²]
  // d^{π_e} against d^{π_b} without lifting through φ_T; reported, never asserted
  double linf_unlifted = 0, chi2_unlifted = 0;
  std::string construction = "aggregation";
  std::vector<std::string> support_violations;
  bool theorem_regime = false;  // every belief one-hot
  bool coarse_le_fine = false;

  nlohmann::json to_json() const;
};

/// max ratio over the support of d_num; +∞ when d_den vanishes there, 0/0 entries are skipped.
double coverage_linf(const OccupancyTable& d_num, const OccupancyTable& d_den,
                     std::vector<std::string>* notes = nullptr);
/// Σ d_num²/d_den; throws SupportViolation when d_den vanishes under d_num.
double coverage_chi2(const OccupancyTable& d_num, const OccupancyTable& d_den);
/// Σ (d_num − d_den)²/d_den over the union of supports.
double chi2_divergence(const OccupancyTable& d_num, const OccupancyTable& d_den);

/// Push-forward of node mass onto representative nodes; state and action coordinates are kept.
OccupancyTable aggregate_coarse(const OccupancyTable& d, const AbstractionMap& phi);

/// Policy that plays π at the representative of each node's φ-group.
Policy lift_policy(const BeliefGraph& g, const AbstractionMap& phi, const Policy& pi);

/// Fine: (node, s, a) occupancies of [π_e^{φ_T}]_true vs π_b on histories of `depth` observations
/// with per-step weight 1/depth. Coarse: both pushed forward through φ_T.
CoverageReport compare_coverage(const POMDP& m, const Policy& pi_b, const Policy& pi_e, int T, int depth);

}  // namespace bope
