#include "bope/policy.hpp"

#include <cmath>

#include "bope/json_io.hpp"

namespace bope {

const char* to_string(Policy::Kind k) {
  switch (k) {
    case Policy::Kind::Constant: return "constant";
    case Policy::Kind::Memoryless: return "memoryless";
    case Policy::Kind::TruncatedMemory: return "truncated-memory";
    case Policy::Kind::HistoryTable: return "history-table";
    case Policy::Kind::BeliefLinear: return "belief-linear";
  }
  return "?";
}

Policy Policy::uniform(int n_actions) {
  return constant_dist(Eigen::VectorXd::Constant(n_actions, 1.0 / n_actions));
}

Policy Policy::constant_dist(const Eigen::VectorXd& p) {
  Policy r;
  r.kind = Kind::Constant;
  r.n_actions = int(p.size());
  r.constant = p;
  r.declared_L_pi = 0.0;
  return r;
}

Policy Policy::memoryless(const Eigen::MatrixXd& by_obs) {
  Policy r;
  r.kind = Kind::Memoryless;
  r.n_actions = int(by_obs.cols());
  r.by_obs = by_obs;
  return r;
}

Policy Policy::truncated(int T, std::map<std::string, Eigen::VectorXd> table,
                         const Eigen::VectorXd& fallback) {
  Policy r;
  r.kind = Kind::TruncatedMemory;
  r.window = T;
  r.n_actions = int(fallback.size());
  r.table = std::move(table);
  r.fallback = fallback;
  return r;
}

Policy Policy::history_table(std::map<std::string, Eigen::VectorXd> table,
                             const Eigen::VectorXd& fallback) {
  Policy r;
  r.kind = Kind::HistoryTable;
  r.n_actions = int(fallback.size());
  r.table = std::move(table);
  r.fallback = fallback;
  return r;
}

Policy Policy::belief_linear(const Eigen::MatrixXd& K) {
  Policy r;
  r.kind = Kind::BeliefLinear;
  r.n_actions = int(K.cols());
  r.K = K;
  double L = 0;
  for (int s = 0; s < K.rows(); ++s)
    for (int t = 0; t < K.rows(); ++t) L = std::max(L, 0.5 * (K.row(s) - K.row(t)).cwiseAbs().sum());
  r.declared_L_pi = L;
  return r;
}

int Policy::memory() const {
  switch (kind) {
    case Kind::Constant: return 0;
    case Kind::Memoryless: return 1;
    case Kind::TruncatedMemory: return window;
    default: return -1;
  }
}

Eigen::VectorXd Policy::probs(const History& tau, const Eigen::VectorXd& belief) const {
  switch (kind) {
    case Kind::Constant: return constant;
    case Kind::Memoryless: return by_obs.row(tau.last_obs()).transpose();
    case Kind::TruncatedMemory: {
      auto it = table.find(tau.window(window).key());
      return it == table.end() ? fallback : it->second;
    }
    case Kind::HistoryTable: {
      auto it = table.find(tau.key());
      return it == table.end() ? fallback : it->second;
    }
    case Kind::BeliefLinear: return K.transpose() * belief;
  }
  return {};
}

void Policy::validate(double tol) const {
  auto check = [&](const Eigen::VectorXd& p, const std::string& what) {
    if (p.size() != n_actions) throw BadSpec("policy " + what + " has wrong action count");
    if ((p.array() < 0).any() || std::abs(p.sum() - 1.0) > tol)
      throw NonStochasticRow("policy " + what);
  };
  switch (kind) {
    case Kind::Constant: check(constant, "constant"); break;
    case Kind::Memoryless:
      for (int o = 0; o < by_obs.rows(); ++o) check(by_obs.row(o).transpose(), "obs " + std::to_string(o));
      break;
    case Kind::TruncatedMemory:
    case Kind::HistoryTable:
      check(fallback, "fallback");
      for (const auto& [k, p] : table) check(p, k);
      break;
    case Kind::BeliefLinear:
      for (int s = 0; s < K.rows(); ++s) check(K.row(s).transpose(), "row " + std::to_string(s));
      break;
  }
}

std::string Policy::hash() const { return hex64(fnv1a64(policy_to_json(*this).dump())); }

}  // namespace bope
