#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bope/dataset.hpp"
#include "bope/ds_estimator.hpp"
#include "bope/fdvf.hpp"

namespace bope {

/// Law of (node, a) in D1 data: P(h)·P_{π_b}(τ_h⁺)·π_b(a|τ_h⁺) for nodes of depth ≤ max_h.
Eigen::MatrixXd d1_node_distribution(const POMDP& m, const BeliefGraph& g, const Policy& pi_b,
                                     const PrefixDist& prefix);
/// Σ over nodes of each φ-cell.
Eigen::MatrixXd push_forward(const Eigen::MatrixXd& d_nodes, const AbstractionMap& phi);
/// E_{d^D}[(f − 𝒯^{π_φ}f)²] on the abstract MDP.
double ds_population_loss(const Eigen::MatrixXd& f, const ExplicitMDP<double>& M, const Eigen::MatrixXd& pi_phi,
                          const Eigen::MatrixXd& dD);
/// C_π(φ) = max d^{π_φ}(x,a)/d^D(x,a) over the support of d^{π_φ}; +∞ off the data support.
double abstract_coverage(const ExplicitMDP<double>& M, const Eigen::MatrixXd& pi_phi, const Eigen::MatrixXd& dD);

/// Everything derived from (model, policies, ε) for the double-sampling experiments.
struct DsFixture {
  BeliefGraph graph;
  AbstractionMap phi;
  AbstractMDP amdp;
  Eigen::MatrixXd pi_phi;  // |X|x|A|
  Eigen::MatrixXd Q_phi;   // Q^{π_φ} on the abstract MDP
  Eigen::MatrixXd dD;      // pushed-forward data law
  double J_phi = 0;        // J(π_φ) on the abstract MDP
  double C_pi = 0;
  double L_Q = 0, L_V = 0;  // probe suprema over representative pairs
};

/// Enumerates histories to depth prefix.max_h + 1, builds and closes the ε-cover and solves the
/// abstract MDP. Lipschitz constants are measured over representative pairs.
DsFixture build_ds_fixture(const POMDP& m, const Policy& pi_e, const Policy& pi_b, const PrefixDist& prefix,
                           double eps, std::size_t rep_cap = 200000);

/// J(π) of a belief-based policy when the reachable belief set is finite: value on the closed
/// cover at a radius below every belief gap. Throws TreeTooLarge when the closure does not end.
double finite_belief_value(const POMDP& m, const Policy& pi, double eps = 1e-9, std::size_t rep_cap = 200000);

struct ExperimentConfig {
  POMDP model;
  Policy pi_e, pi_b;
  std::vector<std::size_t> n_grid;
  int seeds = 20;
  std::uint64_t master_seed = 1;
  double delta = 0.1;
  PrefixDist prefix;
  D1Mode mode = D1Mode::IndependentRedraw;
  bool cor1_rule = true;          // balanced ε(n); else every ε of eps_grid
  std::vector<double> eps_grid;
  std::vector<double> class_shifts{0.3, 0.15, -0.2, 0.1, 0.05, -0.05, 0.02};
  double eps_floor = 1e-9;        // ε used when the rule gives something smaller
  int workers = 1;
};

struct ExperimentRow {
  std::size_t n = 0;
  int seed = 0;
  double eps = 0;
  int n_reps = 0;
  double J_true = 0, J_hat = 0, error = 0;
  double bound = 0, theorem_bound = 0;
  double C_pi = 0;
  std::size_t chosen = 0;
  bool cor1_applicable = false;
  bool within_bound = false;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  std::vector<std::size_t> n_values;
  std::vector<double> median_error;  // per n_values entry
  bool medians_non_increasing = false;
  std::size_t bound_violations = 0;
  double L_Q = 0, L_pi = 0, L_V = 0;
  double J_true = 0;

  std::string csv() const;
  nlohmann::json summary() const;
};

/// Per (n, ε, seed): exact J, J_hat from ds_fit in abstract mode, error and the computed bound.
ExperimentResult bound_vs_error_experiment(const ExperimentConfig& cfg);

/// ‖V^π − [V_bin^{π_φ}]_true‖∞ over the nodes of a closed ε-cover, for an open-loop π whose
/// true value ⟨b, V_s⟩ is exact.
struct AbstractionErrorCheck {
  double eps = 0;
  int n_reps = 0;
  double measured = 0;
  double L_phi1 = 0;
  double tail = 0;
  double bound = 0;  // L_φ^[1]·ε + 2·tail
  bool pass = false;
};
AbstractionErrorCheck abstraction_error_check(const POMDP& m, const Eigen::VectorXd& action_dist, double eps,
                                              int depth, double L_V, std::size_t rep_cap = 200000);

struct FdvfExperimentConfig {
  POMDP model;  // finite horizon, predict-first
  Policy pi_e, pi_b;
  int window = 1;  // history pairs kept by V and θ tables
  std::vector<std::size_t> n_grid;
  int seeds = 20;
  std::uint64_t master_seed = 1;
  std::vector<double> class_shifts{0.3, 0.15, -0.2, 0.1, 0.05, -0.05, 0.02};
  std::optional<int> truncation_T;
  int workers = 1;
};

struct FdvfExperimentRow {
  std::size_t n = 0;
  int seed = 0;
  double J_true = 0, J_hat = 0, error = 0;
  std::size_t chosen = 0;
  std::vector<double> losses;
};

struct FdvfExperimentResult {
  std::vector<FdvfExperimentRow> rows;
  std::vector<std::size_t> n_values;
  std::vector<double> median_error;
  double J_true = 0;
  double solve_residual = 0;     // of the realizing V
  double completeness_gap = 0;   // largest window disagreement of 𝓑^𝓗V over the class
  std::size_t V_card = 0, Theta_card = 0;
  double C_mu = 0;

  std::string csv() const;
  nlohmann::json summary() const;
};

/// 𝓥 = realizing V plus perturbations, Θ = {𝓑^𝓗V : V ∈ 𝓥} on the same window; D2 data per (n, seed).
FdvfExperimentResult fdvf_experiment(const FdvfExperimentConfig& cfg);

/// ε-cover size of the reachable belief set by depth, next to the raw node count.
struct CoverGrowthRow {
  int depth = 0;
  std::size_t nodes = 0;
  int cover = 0;
};
std::vector<CoverGrowthRow> cover_growth_sweep(const POMDP& m, const std::vector<int>& depths, double eps);

struct LinearFit {
  double slope = 0, intercept = 0, r2 = 0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// T₀(ε) from exact window diameters of the depth-`depth` history tree.
struct ForgettingRow {
  double eps = 0;
  int T0 = -1;
};
std::vector<ForgettingRow> forgetting_sweep(const POMDP& m, int depth, const std::vector<double>& eps_grid);

}  // namespace bope
