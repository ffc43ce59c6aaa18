#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bope {

enum class DomainKind { AbstractStateAction, HistoryAction, FuturePair, History };
const char* to_string(DomainKind k);

/// One member of a finite class. Rows index the domain; columns are actions for the
/// *Action kinds and a single column otherwise. Future-pair and history domains carry
/// (horizon, window, n_obs, n_actions) so tables can be indexed by trajectories.
struct FunctionTable {
  DomainKind kind = DomainKind::AbstractStateAction;
  Eigen::MatrixXd values;
  double bound = 0;
  std::optional<double> lipschitz_LQ;
  int horizon = 0, window = 0, n_obs = 0, n_actions = 0;

  static FunctionTable table(DomainKind kind, Eigen::MatrixXd values, std::optional<double> bound = {});
  void validate(double tol = 1e-12) const;
  bool same_domain(const FunctionTable& o) const;
};

struct FunctionClass {
  std::vector<FunctionTable> members;

  std::size_t size() const { return members.size(); }
  double class_bound() const;
  void validate() const;
};

/// Exact table first, then one member per shift c: even slots add c everywhere, odd
/// slots add a random ±c sign pattern. Values are clipped to [lo, hi].
FunctionClass perturbation_class(const FunctionTable& exact, const std::vector<double>& shifts,
                                 std::uint64_t seed, double lo, double hi);

nlohmann::json class_to_json(const FunctionClass& F);
FunctionClass class_from_json(const nlohmann::json& j);

}  // namespace bope
