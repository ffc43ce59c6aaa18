#include "bope/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bope/oracles.hpp"
#include "bope/parallel.hpp"
#include "bope/rng.hpp"
#include "bope/stability.hpp"

namespace bope {

Eigen::MatrixXd d1_node_distribution(const POMDP& m, const BeliefGraph& g, const Policy& pi_b,
                                     const PrefixDist& prefix) {
  const std::vector<double> ph = prefix.probs();
  const std::vector<double> reach = reach_probabilities(m, g, pi_b);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(g.size(), m.n_actions);
  for (int n = 0; n < g.size(); ++n) {
    const int h = g.node_depth(n);
    if (h > prefix.max_h || reach[n] <= 0) continue;
    d.row(n) = ph[h - 1] * reach[n] * pi_b.probs(g.history(n), g.belief(n)).transpose();
  }
  return d;
}

Eigen::MatrixXd push_forward(const Eigen::MatrixXd& d_nodes, const AbstractionMap& phi) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(phi.n_reps(), d_nodes.cols());
  for (Eigen::Index n = 0; n < d_nodes.rows(); ++n) out.row(phi.assignment[n]) += d_nodes.row(n);
  return out;
}

double ds_population_loss(const Eigen::MatrixXd& f, const ExplicitMDP<double>& M, const Eigen::MatrixXd& pi_phi,
                          const Eigen::MatrixXd& dD) {
  const Eigen::MatrixXd res = f - bellman(M, pi_phi, f);
  return dD.cwiseProduct(res.cwiseAbs2()).sum();
}

double abstract_coverage(const ExplicitMDP<double>& M, const Eigen::MatrixXd& pi_phi, const Eigen::MatrixXd& dD) {
  const Eigen::MatrixXd d = occupancy(M, pi_phi);
  double worst = 0;
  for (Eigen::Index x = 0; x < d.rows(); ++x)
    for (Eigen::Index a = 0; a < d.cols(); ++a) {
      if (d(x, a) <= 1e-15) continue;
      if (dD(x, a) <= 0) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, d(x, a) / dD(x, a));
    }
  return worst;
}

namespace {

double pair_lipschitz(const BeliefGraph& g, const AbstractionMap& phi, const std::function<double(int, int)>& f,
                      int cols) {
  double L = 0;
  for (int x = 0; x < phi.n_reps(); ++x)
    for (int y = x + 1; y < phi.n_reps(); ++y) {
      const double d = l1(g.belief(phi.representatives[x]), g.belief(phi.representatives[y]));
      if (d <= 1e-12) continue;
      for (int a = 0; a < cols; ++a) L = std::max(L, std::abs(f(x, a) - f(y, a)) / d);
    }
  return L;
}

}  // namespace

DsFixture build_ds_fixture(const POMDP& m, const Policy& pi_e, const Policy& pi_b, const PrefixDist& prefix,
                           double eps, std::size_t rep_cap) {
  if (m.finite_horizon()) throw BadSpec("double-sampling experiments need a discounted model");
  DsFixture fx;
  fx.graph = enumerate_reachable(m, prefix.max_h + 1, &pi_b);
  fx.phi = build_eps_cover(fx.graph, eps);
  close_cover(m, fx.graph, fx.phi, rep_cap);
  fx.amdp = induce_abstract_mdp(m, fx.graph, fx.phi, nullptr, FrontierClosure::Error);
  fx.pi_phi = abstract_policy_matrix(fx.graph, fx.phi, pi_e);
  fx.Q_phi = evaluate_q(fx.amdp.mdp, fx.pi_phi);
  fx.J_phi = j_of_q(fx.amdp.mdp, fx.pi_phi, fx.Q_phi);
  fx.dD = push_forward(d1_node_distribution(m, fx.graph, pi_b, prefix), fx.phi);
  fx.C_pi = abstract_coverage(fx.amdp.mdp, fx.pi_phi, fx.dD);
  const Eigen::VectorXd V = fx.Q_phi.cwiseProduct(fx.pi_phi).rowwise().sum();
  fx.L_Q = pair_lipschitz(fx.graph, fx.phi, [&](int x, int a) { return fx.Q_phi(x, a); }, m.n_actions);
  fx.L_V = pair_lipschitz(fx.graph, fx.phi, [&](int x, int) { return V(x); }, 1);
  return fx;
}

double finite_belief_value(const POMDP& m, const Policy& pi, double eps, std::size_t rep_cap) {
  BeliefGraph g = enumerate_reachable(m, 1);
  AbstractionMap phi = build_eps_cover(g, eps);
  close_cover(m, g, phi, rep_cap);
  const AbstractMDP a = induce_abstract_mdp(m, g, phi, nullptr, FrontierClosure::Error);
  const Eigen::MatrixXd P = abstract_policy_matrix(g, phi, pi);
  return a.mdp.d0.dot(evaluate_v(a.mdp, P));
}

std::string ExperimentResult::csv() const {
  std::ostringstream s;
  s.precision(17);
  s << "instance_id,seed,n,eps,T,n_reps,J_true,J_hat,error,bound,theorem_bound,C_pi,chosen,cor1_applicable,"
       "within_bound\n";
  for (const auto& r : rows)
    s << 0 << ',' << r.seed << ',' << r.n << ',' << r.eps << ",," << r.n_reps << ',' << r.J_true << ','
      << r.J_hat << ',' << r.error << ',' << r.bound << ',' << r.theorem_bound << ',' << r.C_pi << ','
      << r.chosen << ',' << (r.cor1_applicable ? 1 : 0) << ',' << (r.within_bound ? 1 : 0) << '\n';
  return s.str();
}

nlohmann::json ExperimentResult::summary() const {
  nlohmann::json j;
  j["n"] = n_values;
  j["median_error"] = median_error;
  j["medians_non_increasing"] = medians_non_increasing;
  j["bound_violations"] = bound_violations;
  j["L_Q"] = L_Q;
  j["L_pi"] = L_pi;
  j["L_V"] = L_V;
  j["J_true"] = J_true;
  j["rows"] = rows.size();
  return j;
}

ExperimentResult bound_vs_error_experiment(const ExperimentConfig& cfg) {
  if (cfg.n_grid.empty()) throw BadSpec("n-grid is empty");
  if (cfg.seeds < 1) throw BadSpec("need at least one seed");
  if (!cfg.cor1_rule && cfg.eps_grid.empty()) throw BadSpec("eps grid is empty");
  const POMDP& m = cfg.model;
  const double R = m.rmax, g = m.gamma;

  ExperimentResult out;
  out.J_true = finite_belief_value(m, cfg.pi_e);
  // constants from the finest cover, shared by every row
  const DsFixture ref = build_ds_fixture(m, cfg.pi_e, cfg.pi_b, cfg.prefix, cfg.eps_floor);
  out.L_Q = ref.L_Q;
  out.L_V = ref.L_V;
  out.L_pi = cfg.pi_e.declared_L_pi.value_or(0.0);
  const double F_card = 1.0 + double(cfg.class_shifts.size());

  struct Job {
    std::size_t n;
    double eps;
  };
  std::vector<Job> jobs;
  for (std::size_t n : cfg.n_grid) {
    if (cfg.cor1_rule) {
      const DsBound b = compute_bound_ds(1.0, double(n), cfg.delta, F_card, R, g, out.L_Q, out.L_pi, out.L_V, 0.0);
      jobs.push_back({n, std::max(b.cor1_eps, cfg.eps_floor)});
    } else {
      for (double e : cfg.eps_grid) jobs.push_back({n, e});
    }
  }

  for (const Job& job : jobs) {
    const DsFixture fx = build_ds_fixture(m, cfg.pi_e, cfg.pi_b, cfg.prefix, job.eps);
    FunctionTable exact = FunctionTable::table(DomainKind::AbstractStateAction, fx.Q_phi, R / (1 - g));
    exact.lipschitz_LQ = fx.L_Q;
    const FunctionClass F =
        perturbation_class(exact, cfg.class_shifts, splitmix64(cfg.master_seed ^ 0x636c617373ULL), 0.0, R / (1 - g));
    const DsBound b = compute_bound_ds(fx.C_pi, double(job.n), cfg.delta, double(F.size()), R, g, out.L_Q,
                                       out.L_pi, out.L_V, job.eps);
    const DsContext ctx{&m, &fx.graph, &cfg.pi_e, &fx.phi};
    std::vector<ExperimentRow> rows(cfg.seeds);
    for (int s = 0; s < cfg.seeds; ++s) {
      const std::uint64_t seed = splitmix64(cfg.master_seed ^ splitmix64(job.n * 1000003ULL + std::uint64_t(s)));
      const D1Dataset d = gen_d1(m, cfg.pi_b, job.n, cfg.prefix, cfg.mode, seed, cfg.workers);
      const EstimateResult est = ds_fit(F, d, EstimationMode::Abstract, ctx);
      ExperimentRow& r = rows[s];
      r.n = job.n;
      r.seed = s;
      r.eps = job.eps;
      r.n_reps = fx.phi.n_reps();
      r.J_true = out.J_true;
      r.J_hat = est.J_hat;
      r.error = std::abs(est.J_hat - out.J_true);
      r.theorem_bound = b.value;
      r.bound = cfg.cor1_rule ? b.cor1_bound : b.value;
      r.C_pi = fx.C_pi;
      r.chosen = est.chosen_index;
      r.cor1_applicable = b.cor1_applicable;
      r.within_bound = r.error <= r.bound;
      if (!r.within_bound) ++out.bound_violations;
    }
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  }

  for (std::size_t n : cfg.n_grid) {
    std::vector<double> errs;
    for (const auto& r : out.rows)
      if (r.n == n) errs.push_back(r.error);
    std::sort(errs.begin(), errs.end());
    const std::size_t k = errs.size();
    out.n_values.push_back(n);
    out.median_error.push_back(k % 2 ? errs[k / 2] : 0.5 * (errs[k / 2 - 1] + errs[k / 2]));
  }
  out.medians_non_increasing = true;
  for (std::size_t i = 1; i < out.median_error.size(); ++i)
    if (out.median_error[i] > out.median_error[i - 1]) out.medians_non_increasing = false;
  return out;
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

}  // namespace

AbstractionErrorCheck abstraction_error_check(const POMDP& m, const Eigen::VectorXd& action_dist, double eps,
                                              int depth, double L_V, std::size_t rep_cap) {
  AbstractionErrorCheck out;
  out.eps = eps;
  BeliefGraph g = enumerate_reachable(m, depth);
  AbstractionMap phi = build_eps_cover(g, eps);
  close_cover(m, g, phi, rep_cap);
  const AbstractMDP a = induce_abstract_mdp(m, g, phi, nullptr, FrontierClosure::SelfLoop);
  const Eigen::MatrixXd P = action_dist.transpose().replicate(phi.n_reps(), 1);
  const Eigen::VectorXd V_bin = evaluate_v(a.mdp, P);
  const Eigen::VectorXd V_s = open_loop_state_values(m, action_dist);
  for (int n = 0; n < g.size(); ++n)
    out.measured = std::max(out.measured, std::abs(g.belief(n).dot(V_s) - V_bin(phi.assignment[n])));
  out.n_reps = phi.n_reps();
  out.L_phi1 = compute_Lphi1(0.0, L_V, m.rmax, m.gamma);
  out.tail = a.frontier_bias;
  out.bound = out.L_phi1 * eps + 2 * out.tail;
  out.pass = out.measured <= out.bound;
  return out;
}

std::string FdvfExperimentResult::csv() const {
  std::ostringstream s;
  s.precision(17);
  s << "seed,n,J_true,J_hat,error,chosen\n";
  for (const auto& r : rows)
    s << r.seed << ',' << r.n << ',' << r.J_true << ',' << r.J_hat << ',' << r.error << ',' << r.chosen << '\n';
  return s.str();
}

nlohmann::json FdvfExperimentResult::summary() const {
  nlohmann::json j;
  j["n"] = n_values;
  j["median_error"] = median_error;
  j["J_true"] = J_true;
  j["solve_residual"] = solve_residual;
  j["completeness_gap"] = completeness_gap;
  j["V_card"] = V_card;
  j["Theta_card"] = Theta_card;
  j["C_mu"] = C_mu;
  j["rows"] = rows.size();
  return j;
}

FdvfExperimentResult fdvf_experiment(const FdvfExperimentConfig& cfg) {
  if (cfg.n_grid.empty()) throw BadSpec("n-grid is empty");
  if (cfg.seeds < 1) throw BadSpec("need at least one seed");
  const POMDP& m = cfg.model;
  if (!m.horizon) throw BadSpec("FDVF experiments need a finite horizon");
  const int H = *m.horizon;

  FdvfExperimentResult out;
  const FdvfSolution sol = solve_fdvf(m, cfg.pi_e, cfg.pi_b, cfg.window);
  out.J_true = sol.J;
  out.solve_residual = sol.residual;
  const double span = sol.V.values.cwiseAbs().maxCoeff() + 1.0;
  const FunctionClass Vc =
      perturbation_class(sol.V, cfg.class_shifts, splitmix64(cfg.master_seed ^ 0x66647666ULL), -span, span);
  const FdvfDomain td(H, m.n_obs, m.n_actions, cfg.window);
  FunctionClass Theta;
  for (const FunctionTable& V : Vc.members) {
    double gap = 0;
    Theta.members.push_back(residual_theta_table(bellman_residual_H(m, cfg.pi_e, cfg.pi_b, V), td, &gap));
    out.completeness_gap = std::max(out.completeness_gap, gap);
  }
  out.V_card = Vc.size();
  out.Theta_card = Theta.size();
  const MuSpec mu{&m, &cfg.pi_e, &cfg.pi_b};
  out.C_mu = mu.max_mu(H, cfg.truncation_T.value_or(0));
  FdvfOptions opt;
  opt.truncation_T = cfg.truncation_T;
  opt.workers = cfg.workers;

  for (std::size_t n : cfg.n_grid) {
    std::vector<double> errs;
    for (int s = 0; s < cfg.seeds; ++s) {
      const std::uint64_t seed = splitmix64(cfg.master_seed ^ splitmix64(n * 1000003ULL + std::uint64_t(s)));
      const D2Dataset d = gen_d2(m, cfg.pi_b, n, H, seed, cfg.workers);
      const EstimateResult est = fdvf_fit(Vc, Theta, d, mu, opt);
      FdvfExperimentRow r;
      r.n = n;
      r.seed = s;
      r.J_true = out.J_true;
      r.J_hat = est.J_hat;
      r.error = std::abs(est.J_hat - out.J_true);
      r.chosen = est.chosen_index;
      r.losses = est.losses;
      errs.push_back(r.error);
      out.rows.push_back(std::move(r));
    }
    out.n_values.push_back(n);
    out.median_error.push_back(median_of(errs));
  }
  return out;
}

std::vector<CoverGrowthRow> cover_growth_sweep(const POMDP& m, const std::vector<int>& depths, double eps) {
  std::vector<CoverGrowthRow> out;
  for (int D : depths) {
    const BeliefGraph g = enumerate_reachable(m, D);
    out.push_back({D, std::size_t(g.size()), build_eps_cover(g, eps).n_reps()});
  }
  return out;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw BadSpec("linear fit needs two or more points");
  const Eigen::Index k = Eigen::Index(x.size());
  Eigen::MatrixXd A(k, 2);
  Eigen::VectorXd b(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = x[i];
    b(i) = y[i];
  }
  const Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
  const double ss_res = (A * c - b).squaredNorm();
  const double ss_tot = (b.array() - b.mean()).square().sum();
  return {c(1), c(0), ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0};
}

std::vector<ForgettingRow> forgetting_sweep(const POMDP& m, int depth, const std::vector<double>& eps_grid) {
  const BeliefGraph g = enumerate_reachable(m, depth);
  const std::vector<double> radii = forgetting_radii(g, depth - 1);
  std::vector<ForgettingRow> out;
  for (double e : eps_grid) out.push_back({e, minimal_window(radii, e)});
  return out;
}

}  // namespace bope
