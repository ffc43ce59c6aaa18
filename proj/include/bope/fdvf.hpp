#pragma once

#include <optional>
#include <vector>

#include "bope/dataset.hpp"
#include "bope/ds_estimator.hpp"
#include "bope/function_class.hpp"
#include "bope/short_memory.hpp"

namespace bope {

/// Flat indexing of finite-horizon tables. A future-pair at step h is the last min(W, h−1)
/// (o,a) pairs of τ_h followed by (o_h,a_h,…,o_H,a_H); a history row is the windowed τ_h alone.
/// Steps are 1-based; obs/acts are full-length trajectory arrays.
struct FdvfDomain {
  int H = 1, n_obs = 1, n_actions = 1, window = 0;
  std::vector<long> v_offset, theta_offset;  // indexed by h, entry H+1 holds the size

  FdvfDomain() = default;
  FdvfDomain(int H, int n_obs, int n_actions, int window);
  static FdvfDomain of(const FunctionTable& f);

  long v_size() const { return v_offset[H + 1]; }
  long theta_size() const { return theta_offset[H + 1]; }
  int hist_pairs(int h) const { return std::min(window, h - 1); }
  long v_index(int h, const std::vector<int>& obs, const std::vector<int>& acts) const;
  long theta_index(int h, const std::vector<int>& obs, const std::vector<int>& acts) const;

 private:
  long hist_code(int h, const std::vector<int>& obs, const std::vector<int>& acts) const;
};

FunctionTable fdvf_v_table(const FdvfDomain& d, const Eigen::VectorXd& values);
FunctionTable fdvf_theta_table(const FdvfDomain& d, const Eigen::VectorXd& values);

/// μ(a,τ⁺) = π_e(a|τ⁺)/π_b(a|τ⁺) from the declared policies.
struct MuSpec {
  const POMDP* model = nullptr;
  const Policy* pi_e = nullptr;
  const Policy* pi_b = nullptr;

  /// With T > 0 both policies see only the last-T window of τ_h⁺.
  double mu(int h, const std::vector<int>& obs, const std::vector<int>& acts, int T = 0) const;
  double max_mu(int H, int T = 0) const;
};

struct FdvfOptions {
  std::optional<int> truncation_T;
  const std::vector<double>* weights = nullptr;  // w^{φ_T}(f₁) per trajectory
  int workers = 1;
};

/// Σ_h E_D[{μ(r_h + V(f_{h+1})) − V(f_h)}θ(τ_h) − ½θ(τ_h)²] with V(f_{H+1}) = 0.
double fdvf_inner(const FunctionTable& V, const FunctionTable& theta, const D2Dataset& d, const MuSpec& mu,
                  const FdvfOptions& opt = {});

/// argmin_V max_θ of the inner objective; losses and inner both hold the per-V maxima.
EstimateResult fdvf_fit(const FunctionClass& Vclass, const FunctionClass& Theta, const D2Dataset& d,
                        const MuSpec& mu, const FdvfOptions& opt = {});

/// E_D[V(f₁)] over the dataset.
double fdvf_estimate(const FunctionTable& V, const D2Dataset& d);
/// E_{π_b}[V(f₁)] by enumeration.
double fdvf_estimate_exact(const FunctionTable& V, const POMDP& m, const Policy& pi_b, int H);

/// Exact per-cell sums of the inner objective: S_c = E_{π_b}[X·1{θ-cell c}] and N_c = P(cell c).
struct FdvfCells {
  Eigen::VectorXd S, N;
};
FdvfCells fdvf_population_cells(const FunctionTable& V, const FdvfDomain& theta_domain, const MuSpec& mu,
                                int H);
double fdvf_population_inner(const FunctionTable& V, const FunctionTable& theta, const MuSpec& mu, int H);
/// max over all tabular θ: Σ_c S_c²/(2N_c).
double fdvf_population_max(const FunctionTable& V, const FdvfDomain& theta_domain, const MuSpec& mu, int H);

/// (𝓑^𝓗V)(τ_h) on every history with P_{π_b}(τ_h) > 0.
struct ResidualEntry {
  int h = 1;
  std::vector<int> obs, acts;  // τ_h: h−1 pairs
  double prob = 0;             // P_{π_b}(τ_h)
  double value = 0;
};
std::vector<ResidualEntry> bellman_residual_H(const POMDP& m, const Policy& pi_e, const Policy& pi_b,
                                              const FunctionTable& V);
/// ½Σ_h E_{π_b}[(𝓑^𝓗V)(τ_h)²]
double half_mean_square(const std::vector<ResidualEntry>& res);
/// Residual as a θ table on the given domain; `gap` receives the largest disagreement between
/// histories sharing a window (0 when the residual is representable).
FunctionTable residual_theta_table(const std::vector<ResidualEntry>& res, const FdvfDomain& d,
                                   double* gap = nullptr);

/// w^{φ_T}(f₁) = Π_h [π_b^{φ_T}(a_h|τ_h⁺)/π_b(a_h|τ_h⁺)]·[P^{φ_T}(o_h|τ_h)/P(o_h|τ_h)].
double importance_weight_wphiT(const POMDP& m, const ShortMemoryPOMDP& sm, const Policy& pi_b,
                               const Policy& pi_b_T, const D2Trajectory& traj);

/// Minimum-norm V on the window-W future-pair domain solving E_{π_b}[V(f_h)|s_h,τ_h] = V_S^{π_e}(s_h,τ_h).
struct FdvfSolution {
  FunctionTable V;
  double residual = 0;  // max-abs violation of the defining equations
  double J = 0;         // J(π_e) = E_{s₁∼d₀}[V_S(s₁)]
};
FdvfSolution solve_fdvf(const POMDP& m, const Policy& pi_e, const Policy& pi_b, int window);

/// 1406 + √(80707 + 29C)
double fdvf_default_c(double C = 1.0);
/// L_φ·ε + √H·ratio·√((cHC_𝓥²C_μ/n)·log(|𝓥||Θ|/δ) + L_𝓔·ε)
double compute_bound_fdvf(double coverage_ratio, double n, double delta, int H, double C_V, double C_mu,
                          double V_card, double Theta_card, double L_E, double L_phi, double eps, double c);
/// L_𝓔 of the full pipeline.
double fdvf_L_E(int H, double C_mu, double L_pi, double V_inf, double Theta_inf, double min_pi_b,
                double min_p_obs);
/// L_𝓔 of the policy-only pipeline with its constants c₁, c₂.
double fdvf_L_E_tight(int H, double C_mu, double L_pi, double V_inf, double Theta_inf, double min_pi_b,
                      double c1 = 1.0, double c2 = 1.0);
/// Rmax·H·L_π + Rmax·H²·L_π + ‖𝓥‖∞
double fdvf_L_phi_tight(double Rmax, int H, double L_pi, double V_inf);

}  // namespace bope
