#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "bope/belief_graph.hpp"
#include "bope/mdp.hpp"

namespace bope {

enum class AbstractionKind { EpsilonCover, Truncation };
enum class PFamily { PointMass, OccupancyWeighted };
enum class FrontierClosure { SelfLoop, NearestRep, Error };

/// Partition of graph nodes; representative ordinals index the abstract state space.
struct AbstractionMap {
  AbstractionKind kind = AbstractionKind::EpsilonCover;
  double eps = 0;   // requested radius (cover) or 0 (truncation)
  int window = 0;   // T for truncation
  std::vector<int> assignment;       // node -> representative ordinal
  std::vector<int> representatives;  // ordinal -> node id
  double radius_eps = 0;             // max ‖b − b_rep‖₁ over assigned nodes (cover) or group diameter
  PFamily p_family = PFamily::PointMass;

  int n_reps() const { return int(representatives.size()); }
  int rep_node(int node) const { return representatives[assignment[node]]; }
};

/// L1 diameter of a set of vectors: max over sign patterns σ of (max σ·x − min σ·x).
double l1_diameter(const std::vector<Eigen::VectorXd>& xs);
double l1_diameter(const BeliefGraph& g, const std::vector<int>& nodes);

/// Greedy farthest-point ε-cover seeded at the root of largest P(o₁).
AbstractionMap build_eps_cover(const BeliefGraph& g, double eps);

/// φ_T: groups nodes by their last-T window; the representative is the node whose history is the
/// window itself, else the lowest-index member.
AbstractionMap build_truncation(const BeliefGraph& g, int T);

/// Expands frontier representatives until every representative has children, adding new
/// representatives for children farther than eps from all existing ones. Returns reps added.
int close_cover(const POMDP& m, BeliefGraph& g, AbstractionMap& phi, std::size_t rep_cap = 200000);

/// Nearest representative ordinal (ties toward lowest ordinal) and its distance.
int nearest_rep(const BeliefGraph& g, const AbstractionMap& phi, const Eigen::VectorXd& b,
                double* dist = nullptr);

struct AbstractMDP {
  ExplicitMDP<double> mdp;
  std::vector<int> rep_nodes;
  int frontier_closures = 0;
  double frontier_bias = 0;  // γ^depth·Rmax/(1−γ) when any closure was applied
};

/// r_φ(x,a) = E_{node∼p_x}[r(b_node,a)]; P_φ(x′|x,a) = E_{node∼p_x}[Σ_{φ(dest)=x′} P(dest|node,a)].
AbstractMDP induce_abstract_mdp(const POMDP& m, const BeliefGraph& g, const AbstractionMap& phi,
                                const Policy* weights_policy = nullptr,
                                FrontierClosure closure = FrontierClosure::SelfLoop);

/// [f]_true(node,a) = f(φ(node),a)
Eigen::MatrixXd lift(const Eigen::MatrixXd& f_bin, const AbstractionMap& phi);
/// Values of a node table at the representatives.
Eigen::MatrixXd restrict_to_reps(const Eigen::MatrixXd& f_nodes, const AbstractionMap& phi);

/// π_φ(x) = π(τ_rep, b_rep) as an |X|x|A| matrix.
Eigen::MatrixXd abstract_policy_matrix(const BeliefGraph& g, const AbstractionMap& phi,
                                       const Policy& pi);

/// 𝐛 of a window history recomputed from d0; off-support windows drop their oldest (o,a)
/// pair until the remainder is on-support, ending at the emission posterior under a uniform prior.
Eigen::VectorXd window_belief(const POMDP& m, const History& w);

nlohmann::json abstraction_to_json(const BeliefGraph& g, const AbstractionMap& phi);
AbstractionMap abstraction_from_json(const BeliefGraph& g, const nlohmann::json& j);

}  // namespace bope
