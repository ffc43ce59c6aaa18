#include <cmath>
#include <fstream>
#include <sstream>

#include "bope/json_io.hpp"

namespace bope {

json to_json(const Eigen::VectorXd& v) {
  json j = json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

json to_json(const Eigen::MatrixXd& m) {
  json j = json::array();
  for (int r = 0; r < m.rows(); ++r) j.push_back(to_json(Eigen::VectorXd(m.row(r).transpose())));
  return j;
}

Eigen::VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw SchemaMismatch("expected an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(Eigen::Index(i)) = j[i].get<double>();
  return v;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw SchemaMismatch("expected a non-empty nested array");
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != cols) throw SchemaMismatch("ragged nested array");
    m.row(Eigen::Index(r)) = vector_from_json(j[r]).transpose();
  }
  return m;
}

json model_to_json(const POMDP& m) {
  json j;
  j["n_states"] = m.n_states;
  j["n_actions"] = m.n_actions;
  j["n_obs"] = m.n_obs;
  if (m.horizon)
    j["horizon"] = *m.horizon;
  else
    j["gamma"] = m.gamma;
  j["rmax"] = m.rmax;
  j["d0"] = to_json(m.d0);
  json T = json::array();
  for (int s = 0; s < m.n_states; ++s) {
    json row = json::array();
    for (int a = 0; a < m.n_actions; ++a)
      row.push_back(to_json(Eigen::VectorXd(m.transition[a].row(s).transpose())));
    T.push_back(row);
  }
  j["transition"] = T;
  j["emission"] = to_json(m.emission);
  j["reward"] = to_json(m.reward);
  if (m.order != UpdateOrder::PredictFirst) j["update_order"] = to_string(m.order);
  return j;
}

namespace {

template <typename Row>
void renormalize(Row&& row, double tol, const std::string& what) {
  if ((row.array() < 0).any()) throw NonStochasticRow(what + " has a negative entry");
  const double s = row.sum();
  if (std::abs(s - 1.0) > tol) throw NonStochasticRow(what + " sums to " + std::to_string(s));
  // rows already stochastic to rounding are kept bit-exact so hashes survive a round trip
  if (std::abs(s - 1.0) > 1e-12) row /= s;
}

const std::vector<std::string> kModelKeys = {"n_states", "n_actions", "n_obs",    "gamma",
                                             "horizon",  "rmax",      "d0",       "transition",
                                             "emission", "reward",    "update_order"};

}  // namespace

POMDP model_from_json(const json& j, double tol) {
  if (!j.is_object()) throw SchemaMismatch("model must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(kModelKeys.begin(), kModelKeys.end(), it.key()) == kModelKeys.end())
      throw SchemaMismatch("unknown model key '" + it.key() + "'");
  POMDP m;
  try {
    m.n_states = j.at("n_states").get<int>();
    m.n_actions = j.at("n_actions").get<int>();
    m.n_obs = j.at("n_obs").get<int>();
    m.rmax = j.at("rmax").get<double>();
    if (j.contains("horizon")) {
      m.horizon = j.at("horizon").get<int>();
      m.gamma = j.value("gamma", 1.0);
    } else {
      m.gamma = j.at("gamma").get<double>();
    }
    m.d0 = vector_from_json(j.at("d0"));
    const json& T = j.at("transition");
    if (int(T.size()) != m.n_states) throw SchemaMismatch("transition has wrong outer size");
    m.transition.assign(m.n_actions, Eigen::MatrixXd::Zero(m.n_states, m.n_states));
    for (int s = 0; s < m.n_states; ++s) {
      if (int(T[s].size()) != m.n_actions) throw SchemaMismatch("transition has wrong action size");
      for (int a = 0; a < m.n_actions; ++a) {
        Eigen::VectorXd row = vector_from_json(T[s][a]);
        if (row.size() != m.n_states) throw SchemaMismatch("transition row has wrong size");
        m.transition[a].row(s) = row.transpose();
      }
    }
    m.emission = matrix_from_json(j.at("emission"));
    m.reward = matrix_from_json(j.at("reward"));
    if (j.contains("update_order")) {
      const auto o = j.at("update_order").get<std::string>();
      if (o == "predict-first")
        m.order = UpdateOrder::PredictFirst;
      else if (o == "update-first")
        m.order = UpdateOrder::UpdateFirst;
      else
        throw SchemaMismatch("unknown update_order '" + o + "'");
    }
  } catch (const json::exception& e) {
    throw SchemaMismatch(e.what());
  }
  if (m.d0.size() != m.n_states || m.emission.rows() != m.n_states ||
      m.emission.cols() != m.n_obs || m.reward.rows() != m.n_states ||
      m.reward.cols() != m.n_actions)
    throw SchemaMismatch("array shapes disagree with n_states/n_actions/n_obs");
  for (int a = 0; a < m.n_actions; ++a)
    for (int s = 0; s < m.n_states; ++s)
      renormalize(m.transition[a].row(s), tol, "transition row");
  for (int s = 0; s < m.n_states; ++s) renormalize(m.emission.row(s), tol, "emission row");
  renormalize(m.d0, tol, "d0");
  validate(m);
  return m;
}

POMDP load_model(const std::string& path) { return model_from_json(json::parse(read_file(path))); }

void save_model(const POMDP& m, const std::string& path) {
  write_file(path, model_to_json(m).dump(2) + "\n");
}

json policy_to_json(const Policy& p) {
  json j;
  j["kind"] = to_string(p.kind);
  j["n_actions"] = p.n_actions;
  switch (p.kind) {
    case Policy::Kind::Constant: j["probs"] = to_json(p.constant); break;
    case Policy::Kind::Memoryless: j["by_obs"] = to_json(p.by_obs); break;
    case Policy::Kind::TruncatedMemory:
      j["window"] = p.window;
      [[fallthrough]];
    case Policy::Kind::HistoryTable: {
      json t = json::object();
      for (const auto& [k, v] : p.table) t[k] = to_json(v);
      j["table"] = t;
      j["fallback"] = to_json(p.fallback);
      break;
    }
    case Policy::Kind::BeliefLinear: j["K"] = to_json(p.K); break;
  }
  if (p.declared_L_pi) j["declared_L_pi"] = *p.declared_L_pi;
  return j;
}

Policy policy_from_json(const json& j) {
  Policy p;
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "constant") {
      p = Policy::constant_dist(vector_from_json(j.at("probs")));
    } else if (kind == "memoryless") {
      p = Policy::memoryless(matrix_from_json(j.at("by_obs")));
    } else if (kind == "truncated-memory" || kind == "history-table") {
      std::map<std::string, Eigen::VectorXd> t;
      for (auto it = j.at("table").begin(); it != j.at("table").end(); ++it)
        t[it.key()] = vector_from_json(it.value());
      const Eigen::VectorXd fb = vector_from_json(j.at("fallback"));
      p = kind == "history-table" ? Policy::history_table(std::move(t), fb)
                                  : Policy::truncated(j.at("window").get<int>(), std::move(t), fb);
    } else if (kind == "belief-linear") {
      p = Policy::belief_linear(matrix_from_json(j.at("K")));
    } else {
      throw BadSpec("unknown policy kind '" + kind + "'");
    }
    if (j.contains("declared_L_pi")) p.declared_L_pi = j.at("declared_L_pi").get<double>();
  } catch (const json::exception& e) {
    throw SchemaMismatch(e.what());
  }
  p.validate(1e-9);
  return p;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) h = (h ^ c) * 1099511628211ULL;
  return h;
}

std::string hex64(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[std::size_t(i)] = digits[h & 15];
  return s;
}

std::string model_hash(const POMDP& m) { return hex64(fnv1a64(model_to_json(m).dump())); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << bytes;
}

}  // namespace bope
