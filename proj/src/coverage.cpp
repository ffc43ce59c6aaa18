#include "bope/coverage.hpp"

#include <cmath>
#include <limits>

namespace bope {

nlohmann::json CoverageReport::to_json() const {
  auto num = [](double x) -> nlohmann::json {
    if (std::isinf(x)) return "inf";
    return x;
  };
  nlohmann::json j;
  j["linf_fine"] = num(linf_fine);
  j["linf_coarse"] = num(linf_coarse);
  j["chi2_fine"] = num(chi2_fine);
  j["chi2_coarse"] = num(chi2_coarse);
  j["chi2_fine_minus_one"] = num(chi2_fine - 1);
  j["chi2_coarse_minus_one"] = num(chi2_coarse - 1);
  j["linf_unlifted"] = num(linf_unlifted);
  j["chi2_unlifted"] = num(chi2_unlifted);
  j["construction"] = construction;
  j["support_violations"] = support_violations;
  j["regime"] = theorem_regime ? "one-hot" : "outside theorem regime";
  j["coarse_le_fine"] = coarse_le_fine;
  return j;
}

double coverage_linf(const OccupancyTable& num, const OccupancyTable& den, std::vector<std::string>* notes) {
  double worst = 0;
  for (const auto& [key, w] : num.weights) {
    if (w <= 0) continue;
    const double d = den.at(std::get<0>(key), std::get<1>(key), std::get<2>(key));
    if (d <= 0) {
      if (notes)
        notes->push_back("node " + std::to_string(std::get<0>(key)) + " action " + std::to_string(std::get<2>(key)) +
                         " has no data mass");
      return std::numeric_limits<double>::infinity();
    }
    worst = std::max(worst, w / d);
  }
  return worst;
}

double coverage_chi2(const OccupancyTable& num, const OccupancyTable& den) {
  double total = 0;
  for (const auto& [key, w] : num.weights) {
    if (w <= 0) continue;
    const double d = den.at(std::get<0>(key), std::get<1>(key), std::get<2>(key));
    if (d <= 0) throw SupportViolation("chi-square coverage needs d_num << d_den");
    total += w * w / d;
  }
  return total;
}

double chi2_divergence(const OccupancyTable& num, const OccupancyTable& den) {
  double total = 0;
  for (const auto& [key, d] : den.weights) {
    if (d <= 0) continue;
    const double diff = num.at(std::get<0>(key), std::get<1>(key), std::get<2>(key)) - d;
    total += diff * diff / d;
  }
  for (const auto& [key, w] : num.weights)
    if (w > 0 && den.at(std::get<0>(key), std::get<1>(key), std::get<2>(key)) <= 0)
      throw SupportViolation("divergence undefined off the reference support");
  return total;
}

OccupancyTable aggregate_coarse(const OccupancyTable& d, const AbstractionMap& phi) {
  OccupancyTable out;
  out.normalization = d.normalization;
  out.truncation_depth = d.truncation_depth;
  out.tail_mass_bound = d.tail_mass_bound;
  for (const auto& [key, w] : d.weights) {
    const int node = std::get<0>(key);
    if (node >= int(phi.assignment.size())) throw DomainMismatch("abstraction does not cover the table");
    out.weights[{phi.rep_node(node), std::get<1>(key), std::get<2>(key)}] += w;
  }
  return out;
}

Policy lift_policy(const BeliefGraph& g, const AbstractionMap& phi, const Policy& pi) {
  std::map<std::string, Eigen::VectorXd> table;
  for (int n = 0; n < g.size(); ++n) {
    const int r = phi.rep_node(n);
    table[g.history(n).key()] = pi.probs(g.history(r), g.belief(r));
  }
  return Policy::history_table(std::move(table), Eigen::VectorXd::Constant(g.n_actions(), 1.0 / g.n_actions()));
}

CoverageReport compare_coverage(const POMDP& m, const Policy& pi_b, const Policy& pi_e, int T, int depth) {
  if (T < 1 || depth < 1) throw BadSpec("T and depth must be positive");
  POMDP fh = m;
  fh.horizon = depth;
  fh.gamma = 1.0;
  const BeliefGraph g = enumerate_reachable(fh, depth);
  const AbstractionMap phi = build_truncation(g, T);
  const Policy lifted = lift_policy(g, phi, pi_e);

  CoverageReport rep;
  rep.theorem_regime = true;
  for (int n = 0; n < g.size() && rep.theorem_regime; ++n)
    rep.theorem_regime = std::abs(g.belief(n).maxCoeff() - 1.0) <= 1e-12;

  const OccupancyTable d_e = occupancy(fh, g, lifted, true);
  const OccupancyTable d_b = occupancy(fh, g, pi_b, true);
  const OccupancyTable c_e = aggregate_coarse(d_e, phi);
  const OccupancyTable c_b = aggregate_coarse(d_b, phi);

  rep.linf_fine = coverage_linf(d_e, d_b, &rep.support_violations);
  rep.linf_coarse = coverage_linf(c_e, c_b, &rep.support_violations);
  const bool fine_ok = std::isfinite(rep.linf_fine);
  rep.chi2_fine = fine_ok ? coverage_chi2(d_e, d_b) : std::numeric_limits<double>::infinity();
  rep.chi2_coarse = std::isfinite(rep.linf_coarse) ? coverage_chi2(c_e, c_b) : std::numeric_limits<double>::infinity();

  const OccupancyTable d_raw = occupancy(fh, g, pi_e, true);
  rep.linf_unlifted = coverage_linf(d_raw, d_b);
  rep.chi2_unlifted = std::isfinite(rep.linf_unlifted) ? coverage_chi2(d_raw, d_b) : std::numeric_limits<double>::infinity();

  constexpr double tol = 1e-12;
  rep.coarse_le_fine = rep.linf_coarse <= rep.linf_fine * (1 + tol) + tol &&
                       rep.chi2_coarse <= rep.chi2_fine * (1 + tol) + tol;
  return rep;
}

}  // namespace bope
