#include "bope/function_class.hpp"

#include <cmath>

#include "bope/errors.hpp"
#include "bope/json_io.hpp"
#include "bope/rng.hpp"

namespace bope {

const char* to_string(DomainKind k) {
  switch (k) {
    case DomainKind::AbstractStateAction: return "abstract-state-action";
    case DomainKind::HistoryAction: return "history-action";
    case DomainKind::FuturePair: return "future-pair";
    case DomainKind::History: return "history";
  }
  return "?";
}

namespace {
DomainKind domain_from_string(const std::string& s) {
  for (DomainKind k : {DomainKind::AbstractStateAction, DomainKind::HistoryAction, DomainKind::FuturePair,
                       DomainKind::History})
    if (s == to_string(k)) return k;
  throw SchemaMismatch("unknown domain kind '" + s + "'");
}
}  // namespace

FunctionTable FunctionTable::table(DomainKind kind, Eigen::MatrixXd values, std::optional<double> bound) {
  FunctionTable f;
  f.kind = kind;
  f.bound = bound ? *bound : (values.size() ? values.cwiseAbs().maxCoeff() : 0.0);
  f.values = std::move(values);
  return f;
}

void FunctionTable::validate(double tol) const {
  if (values.size() && values.cwiseAbs().maxCoeff() > bound + tol)
    throw DomainMismatch("table value exceeds its declared bound");
}

bool FunctionTable::same_domain(const FunctionTable& o) const {
  return kind == o.kind && values.rows() == o.values.rows() && values.cols() == o.values.cols() &&
         horizon == o.horizon && window == o.window && n_obs == o.n_obs && n_actions == o.n_actions;
}

double FunctionClass::class_bound() const {
  double b = 0;
  for (const auto& f : members) b = std::max(b, f.bound);
  return b;
}

void FunctionClass::validate() const {
  if (members.empty()) throw BadSpec("function class is empty");
  for (const auto& f : members) {
    f.validate();
    if (!f.same_domain(members.front())) throw DomainMismatch("class members have different domains");
  }
}

FunctionClass perturbation_class(const FunctionTable& exact, const std::vector<double>& shifts,
                                 std::uint64_t seed, double lo, double hi) {
  FunctionClass F;
  F.members.push_back(exact);
  auto rng = make_stream(seed, named_stream("class"));
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    FunctionTable f = exact;
    const double c = shifts[i];
    if (i % 2 == 0) {
      f.values = (exact.values.array() + c).cwiseMax(lo).cwiseMin(hi);
    } else {
      Eigen::MatrixXd signs(exact.values.rows(), exact.values.cols());
      for (Eigen::Index r = 0; r < signs.rows(); ++r)
        for (Eigen::Index k = 0; k < signs.cols(); ++k) signs(r, k) = coin(rng) ? 1.0 : -1.0;
      f.values = (exact.values + c * signs).cwiseMax(lo).cwiseMin(hi);
    }
    f.bound = std::max(exact.bound, f.values.size() ? f.values.cwiseAbs().maxCoeff() : 0.0);
    F.members.push_back(std::move(f));
  }
  return F;
}

nlohmann::json class_to_json(const FunctionClass& F) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : F.members) {
    nlohmann::json j;
    j["domain"] = to_string(f.kind);
    j["values"] = to_json(f.values);
    j["bound"] = f.bound;
    if (f.lipschitz_LQ) j["lipschitz_LQ"] = *f.lipschitz_LQ;
    j["horizon"] = f.horizon;
    j["window"] = f.window;
    j["n_obs"] = f.n_obs;
    j["n_actions"] = f.n_actions;
    arr.push_back(j);
  }
  return arr;
}

FunctionClass class_from_json(const nlohmann::json& arr) {
  FunctionClass F;
  try {
    for (const auto& j : arr) {
      FunctionTable f;
      f.kind = domain_from_string(j.at("domain").get<std::string>());
      f.values = matrix_from_json(j.at("values"));
      f.bound = j.at("bound").get<double>();
      if (j.contains("lipschitz_LQ")) f.lipschitz_LQ = j.at("lipschitz_LQ").get<double>();
      f.horizon = j.value("horizon", 0);
      f.window = j.value("window", 0);
      f.n_obs = j.value("n_obs", 0);
      f.n_actions = j.value("n_actions", 0);
      F.members.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaMismatch(e.what());
  }
  F.validate();
  return F;
}

}  // namespace bope
