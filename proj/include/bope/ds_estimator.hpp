#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bope/abstraction.hpp"
#include "bope/stability.hpp"
#include "bope/dataset.hpp"
#include "bope/function_class.hpp"

namespace bope {

enum class EstimationMode { TrueSpace, Abstract };
const char* to_string(EstimationMode m);

/// Everything needed to evaluate tables on records: true mode indexes graph nodes,
/// abstract mode indexes representative ordinals of phi.
struct DsContext {
  const POMDP* model = nullptr;
  const BeliefGraph* graph = nullptr;
  const Policy* pi = nullptr;
  const AbstractionMap* phi = nullptr;
};

struct EstimateResult {
  double J_hat = 0;
  std::size_t chosen_index = 0;
  double empirical_loss = 0;
  std::size_t n_used = 0;
  std::string mode;
  std::vector<double> losses;  // per member
  std::vector<double> inner;   // per member inner maxima (min-max estimators)
};

/// Records translated into table rows.
struct ResolvedD1 {
  std::vector<int> row, rowA, rowB, act;
  std::vector<double> rA, rB;
  std::size_t size() const { return row.size(); }
};

ResolvedD1 resolve(const D1Dataset& d, const DsContext& ctx, EstimationMode mode);
/// π (true mode) or π_φ (abstract mode) per table row.
Eigen::MatrixXd policy_rows(const DsContext& ctx, EstimationMode mode);

/// 𝓔(f,π) = mean of (f(b,a) − r_A − γf(b′_A,π))(f(b,a) − r_B − γf(b′_B,π)).
double ds_loss(const FunctionTable& f, const ResolvedD1& data, const Eigen::MatrixXd& pi_rows, double gamma);
double ds_loss(const FunctionTable& f, const D1Dataset& d, EstimationMode mode, const DsContext& ctx);

/// Exhaustive argmin over the class, ties to the lowest index.
EstimateResult ds_fit(const FunctionClass& F, const D1Dataset& d, EstimationMode mode, const DsContext& ctx);

/// E_{o₁}[f(b₁,π)] (true mode) or E_{o₁}[f(φ(b₁),π_φ)] (abstract mode).
double estimate_J(const FunctionTable& f, const DsContext& ctx, EstimationMode mode);

struct DsBound {
  double value = 0;
  double L_E = 0;
  double L_phi1 = 0, L_phi2 = 0, L_phi = 0;
  double stat_term = 0;  // √(32Rmax⁴ log(2|F|/δ)/(n(1−γ)⁴))
  double cor1_eps = 0;
  double cor1_bound = 0;
  double cor1_n_min = 0;
  bool cor1_applicable = false;
};

double ds_L_E(double Rmax, double gamma, double L_Q);

/// Bound at the given ε, plus the balanced-ε specialisation with its own ε and sample threshold.
DsBound compute_bound_ds(double C_pi_phi, double n, double delta, double F_card, double Rmax, double gamma,
                         double L_Q, double L_pi, double L_V, double eps);

/// Hoeffding band √(8Rmax⁴/(n(1−γ)⁴)·log(2k/δ)) for k simultaneous functions.
double hoeffding_band(double Rmax, double gamma, double n, double delta, double k = 1);

}  // namespace bope
