#include "bope/ds_estimator.hpp"

#include <cmath>

#include "bope/parallel.hpp"

namespace bope {

const char* to_string(EstimationMode m) { return m == EstimationMode::TrueSpace ? "true-space" : "abstract"; }

namespace {

void check_ctx(const DsContext& ctx, EstimationMode mode) {
  if (!ctx.model || !ctx.graph || !ctx.pi) throw BadSpec("estimator context needs model, graph and policy");
  if (mode == EstimationMode::Abstract && !ctx.phi) throw BadSpec("abstract mode needs an abstraction");
}

int row_of(const DsContext& ctx, EstimationMode mode, const History& tau) {
  const int n = ctx.graph->find(tau);
  if (n < 0) throw DomainMismatch("history " + tau.key() + " is not in the belief graph");
  if (mode == EstimationMode::TrueSpace) return n;
  if (n >= int(ctx.phi->assignment.size())) throw DomainMismatch("abstraction does not cover " + tau.key());
  return ctx.phi->assignment[n];
}

int expected_rows(const DsContext& ctx, EstimationMode mode) {
  return mode == EstimationMode::TrueSpace ? ctx.graph->size() : ctx.phi->n_reps();
}

void check_table(const FunctionTable& f, const DsContext& ctx, EstimationMode mode) {
  const DomainKind want = mode == EstimationMode::TrueSpace ? DomainKind::HistoryAction : DomainKind::AbstractStateAction;
  if (f.kind != want) throw DomainMismatch(std::string("expected a ") + to_string(want) + " table");
  if (f.values.rows() != expected_rows(ctx, mode) || f.values.cols() != ctx.model->n_actions)
    throw DomainMismatch("table shape does not match the estimation domain");
}

}  // namespace

ResolvedD1 resolve(const D1Dataset& d, const DsContext& ctx, EstimationMode mode) {
  check_ctx(ctx, mode);
  ResolvedD1 r;
  const std::size_t n = d.records.size();
  r.row.resize(n);
  r.rowA.resize(n);
  r.rowB.resize(n);
  r.act.resize(n);
  r.rA.resize(n);
  r.rB.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = d.records[i];
    r.row[i] = row_of(ctx, mode, rec.prefix);
    r.rowA[i] = row_of(ctx, mode, rec.next_A());
    r.rowB[i] = row_of(ctx, mode, rec.next_B());
    r.act[i] = rec.a;
    r.rA[i] = rec.rA;
    r.rB[i] = rec.rB;
  }
  return r;
}

Eigen::MatrixXd policy_rows(const DsContext& ctx, EstimationMode mode) {
  check_ctx(ctx, mode);
  if (mode == EstimationMode::Abstract) return abstract_policy_matrix(*ctx.graph, *ctx.phi, *ctx.pi);
  const BeliefGraph& g = *ctx.graph;
  Eigen::MatrixXd P(g.size(), ctx.model->n_actions);
  for (int n = 0; n < g.size(); ++n) P.row(n) = ctx.pi->probs(g.history(n), g.belief(n)).transpose();
  return P;
}

double ds_loss(const FunctionTable& f, const ResolvedD1& d, const Eigen::MatrixXd& pi_rows, double gamma) {
  if (d.size() == 0) throw BadSpec("dataset is empty");
  const Eigen::VectorXd v = f.values.cwiseProduct(pi_rows).rowwise().sum();
  constexpr std::size_t kShard = 4096;
  std::vector<double> partial((d.size() + kShard - 1) / kShard, 0.0);
  for (std::size_t k = 0; k < partial.size(); ++k) {
    double s = 0;
    const std::size_t hi = std::min(d.size(), (k + 1) * kShard);
    for (std::size_t i = k * kShard; i < hi; ++i) {
      const double fv = f.values(d.row[i], d.act[i]);
      s += (fv - d.rA[i] - gamma * v(d.rowA[i])) * (fv - d.rB[i] - gamma * v(d.rowB[i]));
    }
    partial[k] = s;
  }
  return tree_sum(partial) / double(d.size());
}

double ds_loss(const FunctionTable& f, const D1Dataset& d, EstimationMode mode, const DsContext& ctx) {
  check_ctx(ctx, mode);
  check_table(f, ctx, mode);
  return ds_loss(f, resolve(d, ctx, mode), policy_rows(ctx, mode), ctx.model->gamma);
}

EstimateResult ds_fit(const FunctionClass& F, const D1Dataset& d, EstimationMode mode, const DsContext& ctx) {
  F.validate();
  check_ctx(ctx, mode);
  for (const auto& f : F.members) check_table(f, ctx, mode);
  const ResolvedD1 r = resolve(d, ctx, mode);
  const Eigen::MatrixXd P = policy_rows(ctx, mode);
  EstimateResult out;
  out.mode = to_string(mode);
  out.n_used = r.size();
  for (std::size_t i = 0; i < F.size(); ++i) {
    out.losses.push_back(ds_loss(F.members[i], r, P, ctx.model->gamma));
    if (i == 0 || out.losses[i] < out.losses[out.chosen_index]) out.chosen_index = i;
  }
  out.empirical_loss = out.losses[out.chosen_index];
  out.J_hat = estimate_J(F.members[out.chosen_index], ctx, mode);
  return out;
}

double estimate_J(const FunctionTable& f, const DsContext& ctx, EstimationMode mode) {
  check_ctx(ctx, mode);
  check_table(f, ctx, mode);
  const BeliefGraph& g = *ctx.graph;
  double J = 0;
  for (int root : g.roots()) {
    const int n = root;
    const int rep = mode == EstimationMode::TrueSpace ? n : ctx.phi->assignment[n];
    const int pn = mode == EstimationMode::TrueSpace ? n : ctx.phi->representatives[rep];
    const Eigen::VectorXd p = ctx.pi->probs(g.history(pn), g.belief(pn));
    J += g.arrive_prob(n) * f.values.row(rep).dot(p);
  }
  return J;
}

double ds_L_E(double R, double gamma, double L_Q) {
  return 8 * R / (1 - gamma) * ((1 + gamma) * L_Q + R / (1 - gamma));
}

DsBound compute_bound_ds(double C, double n, double delta, double F_card, double R, double gamma,
                         double L_Q, double L_pi, double L_V, double eps) {
  DsBound b;
  const double lg = std::log(2 * F_card / delta);
  const double h = 1 - gamma;
  b.L_E = ds_L_E(R, gamma, L_Q);
  b.L_phi1 = compute_Lphi1(L_pi, L_V, R, gamma);
  b.L_phi2 = R / h + L_Q;
  b.L_phi = b.L_phi1 + b.L_phi2;
  b.stat_term = std::sqrt(32 * std::pow(R, 4) / (n * std::pow(h, 4)) * lg);
  b.value = std::sqrt(C) / h * std::sqrt(b.stat_term + b.L_E * eps) + b.L_phi * eps;
  b.cor1_eps = b.stat_term / b.L_E;
  b.cor1_bound = 2 * std::sqrt(C) / h * std::pow(128 * std::pow(R, 4) / (n * std::pow(h, 4)) * lg, 0.25);
  b.cor1_n_min = 8 * std::pow(R, 4) * std::pow(b.L_phi / b.L_E, 4) * lg;
  b.cor1_applicable = n >= b.cor1_n_min;
  return b;
}

double hoeffding_band(double R, double gamma, double n, double delta, double k) {
  return std::sqrt(8 * std::pow(R, 4) / (n * std::pow(1 - gamma, 4)) * std::log(2 * k / delta));
}

}  // namespace bope
