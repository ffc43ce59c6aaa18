#include "bope/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "bope/json_io.hpp"
#include "bope/oracles.hpp"
#include "bope/parallel.hpp"

namespace bope {

namespace {
constexpr std::size_t kShard = 4096;

Eigen::VectorXd checked_probs(const Policy& pi, const History& tau, const Eigen::VectorXd& b) {
  Eigen::VectorXd p = pi.probs(tau, b);
  for (int a = 0; a < p.size(); ++a)
    if (!(p(a) > 0)) throw SupportViolation("behavior policy gives action " + std::to_string(a) +
                                            " probability 0 at " + tau.key());
  return p;
}

json meta_to_json(const DatasetMeta& m) {
  json j;
  j["kind"] = m.kind;
  j["model_hash"] = m.model_hash;
  j["policy_hash"] = m.policy_hash;
  j["n"] = m.n;
  j["seed"] = m.seed;
  if (m.kind == "d1") {
    j["prefix_dist"] = m.prefix_dist;
    j["mode"] = m.mode;
  } else {
    j["horizon"] = m.horizon;
  }
  j["generator_version"] = m.generator_version;
  j["data_hash"] = m.data_hash;
  return j;
}

DatasetMeta meta_from_json(const json& j) {
  DatasetMeta m;
  try {
    m.kind = j.at("kind").get<std::string>();
    m.model_hash = j.at("model_hash").get<std::string>();
    m.policy_hash = j.at("policy_hash").get<std::string>();
    m.n = j.at("n").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    if (m.kind == "d1") {
      m.prefix_dist = j.at("prefix_dist").get<std::string>();
      m.mode = j.at("mode").get<std::string>();
    } else {
      m.horizon = j.at("horizon").get<int>();
    }
    m.generator_version = j.at("generator_version").get<std::string>();
    m.data_hash = j.at("data_hash").get<std::string>();
  } catch (const json::exception& e) {
    throw SchemaMismatch(std::string("meta.json: ") + e.what());
  }
  return m;
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t nl = s.find('\n', pos);
    if (nl == std::string::npos) throw SchemaMismatch("data file does not end with a newline");
    out.push_back(s.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

void check_hashes(const DatasetMeta& meta, const std::string& bytes, const POMDP* model, const Policy* pi_b) {
  if (hex64(fnv1a64(bytes)) != meta.data_hash) throw HashMismatch("data file hash differs from meta.json");
  if (model && model_hash(*model) != meta.model_hash) throw HashMismatch("dataset was generated from another model");
  if (pi_b && pi_b->hash() != meta.policy_hash) throw HashMismatch("dataset was generated with another policy");
}

}  // namespace

const char* to_string(D1Mode m) {
  return m == D1Mode::IndependentRedraw ? "independent-redraw" : "shared-reward";
}

std::vector<double> PrefixDist::probs() const {
  if (max_h < 1) throw BadSpec("prefix max_h must be >= 1");
  std::vector<double> p(max_h);
  double z = 0;
  for (int h = 1; h <= max_h; ++h) z += p[h - 1] = kind == Kind::Uniform ? 1.0 : std::pow(gamma, h - 1);
  for (auto& v : p) v /= z;
  return p;
}

std::string PrefixDist::describe() const {
  std::ostringstream s;
  s.precision(17);
  if (kind == Kind::Uniform)
    s << "uniform(1.." << max_h << ")";
  else
    s << "geometric(gamma=" << gamma << ",max_h=" << max_h << ")";
  return s.str();
}

D1Dataset gen_d1(const POMDP& m, const Policy& pi_b, std::size_t n, const PrefixDist& prefix,
                 D1Mode mode, std::uint64_t seed, int workers) {
  D1Dataset d;
  d.records.resize(n);
  const std::vector<double> ph = prefix.probs();
  const Eigen::Map<const Eigen::VectorXd> hdist(ph.data(), Eigen::Index(ph.size()));
  const int shards = int((n + kShard - 1) / kShard);
  parallel_for(shards, workers, [&](int k) {
    Simulator sim(m, make_stream(seed, std::uint64_t(k)));
    const std::size_t lo = std::size_t(k) * kShard, hi = std::min(n, lo + kShard);
    for (std::size_t i = lo; i < hi; ++i) {
      D1Record& rec = d.records[i];
      rec.mode = mode;
      rec.h = 1 + sample_categorical(sim.rng, hdist);
      int s = sim.sample_state(m.d0);
      const int o1 = sim.sample_obs(s);
      rec.prefix = History({o1});
      Eigen::VectorXd b = initial_belief(m, o1);
      for (int t = 1; t < rec.h; ++t) {
        const int a = sample_categorical(sim.rng, checked_probs(pi_b, rec.prefix, b));
        auto [r, o, s2] = sim.step(s, a);
        (void)r;
        b = belief_update(m, b, a, o);
        rec.prefix = rec.prefix.extended(a, o);
        s = s2;
      }
      rec.a = sample_categorical(sim.rng, checked_probs(pi_b, rec.prefix, b));
      auto [rA, oA, sA] = sim.step(s, rec.a);
      (void)sA;
      const int sB = sim.sample_state(b);
      auto [rB, oB, sB2] = sim.step(sB, rec.a);
      (void)sB2;
      rec.rA = rA;
      rec.oA = oA;
      rec.oB = oB;
      rec.rB = mode == D1Mode::SharedReward ? rA : rB;
    }
  });
  d.meta.kind = "d1";
  d.meta.model_hash = model_hash(m);
  d.meta.policy_hash = pi_b.hash();
  d.meta.n = n;
  d.meta.seed = seed;
  d.meta.prefix_dist = prefix.describe();
  d.meta.mode = to_string(mode);
  d.meta.data_hash = hex64(fnv1a64(d1_jsonl(d.records)));
  return d;
}

D2Dataset gen_d2(const POMDP& m, const Policy& pi_b, std::size_t n, int H, std::uint64_t seed, int workers) {
  if (H < 1) throw BadSpec("horizon must be >= 1");
  D2Dataset d;
  d.horizon = H;
  d.trajs.resize(n);
  const int shards = int((n + kShard - 1) / kShard);
  parallel_for(shards, workers, [&](int k) {
    Simulator sim(m, make_stream(seed, std::uint64_t(k)));
    const std::size_t lo = std::size_t(k) * kShard, hi = std::min(n, lo + kShard);
    for (std::size_t i = lo; i < hi; ++i) {
      D2Trajectory& tr = d.trajs[i];
      int s = sim.sample_state(m.d0);
      int o = sim.sample_obs(s);
      History tau({o});
      Eigen::VectorXd b;
      if (pi_b.needs_belief()) b = initial_belief(m, o);
      for (int t = 1; t <= H; ++t) {
        const int a = sample_categorical(sim.rng, checked_probs(pi_b, tau, b));
        auto [r, o2, s2] = sim.step(s, a);
        tr.obs.push_back(o);
        tr.acts.push_back(a);
        tr.rews.push_back(r);
        if (t == H) break;
        if (pi_b.needs_belief()) b = belief_update(m, b, a, o2);
        tau = tau.extended(a, o2);
        o = o2;
        s = s2;
      }
    }
  });
  d.meta.kind = "d2";
  d.meta.model_hash = model_hash(m);
  d.meta.policy_hash = pi_b.hash();
  d.meta.n = n;
  d.meta.seed = seed;
  d.meta.horizon = H;
  d.meta.data_hash = hex64(fnv1a64(d2_jsonl(d.trajs)));
  return d;
}

std::string d1_jsonl(const std::vector<D1Record>& recs) {
  std::string out;
  for (const auto& r : recs) {
    json j;
    j["h"] = r.h;
    j["prefix"] = r.prefix.seq;
    j["a"] = r.a;
    j["rA"] = r.rA;
    j["oA"] = r.oA;
    j["rB"] = r.rB;
    j["oB"] = r.oB;
    j["mode"] = to_string(r.mode);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string d2_jsonl(const std::vector<D2Trajectory>& trajs) {
  std::string out;
  for (const auto& t : trajs) {
    json steps = json::array();
    for (int k = 0; k < t.length(); ++k) steps.push_back(json::array({t.obs[k], t.acts[k], t.rews[k]}));
    json j;
    j["steps"] = steps;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save(const D1Dataset& d, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir + "/data.jsonl", d1_jsonl(d.records));
  write_file(dir + "/meta.json", meta_to_json(d.meta).dump(2) + "\n");
}

void save(const D2Dataset& d, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir + "/data.jsonl", d2_jsonl(d.trajs));
  write_file(dir + "/meta.json", meta_to_json(d.meta).dump(2) + "\n");
}

D1Dataset load_d1(const std::string& dir, const POMDP* model, const Policy* pi_b) {
  D1Dataset d;
  d.meta = meta_from_json(json::parse(read_file(dir + "/meta.json"), nullptr, false));
  if (d.meta.kind != "d1") throw SchemaMismatch("not a D1 dataset");
  const std::string bytes = read_file(dir + "/data.jsonl");
  const auto lines = split_lines(bytes);
  if (lines.size() != d.meta.n) throw SchemaMismatch("record count differs from meta.json");
  for (const auto& line : lines) {
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw SchemaMismatch("malformed record");
    try {
      D1Record r;
      r.h = j.at("h").get<int>();
      r.prefix = History(j.at("prefix").get<std::vector<int>>());
      r.a = j.at("a").get<int>();
      r.rA = j.at("rA").get<double>();
      r.oA = j.at("oA").get<int>();
      r.rB = j.at("rB").get<double>();
      r.oB = j.at("oB").get<int>();
      const auto mode = j.at("mode").get<std::string>();
      r.mode = mode == "shared-reward" ? D1Mode::SharedReward : D1Mode::IndependentRedraw;
      if (!r.prefix.ends_with_obs() || r.prefix.h() != r.h) throw SchemaMismatch("prefix length differs from h");
      if (r.mode == D1Mode::SharedReward && r.rA != r.rB) throw SchemaMismatch("shared-reward record with rA != rB");
      d.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw SchemaMismatch(e.what());
    }
  }
  check_hashes(d.meta, bytes, model, pi_b);
  return d;
}

D2Dataset load_d2(const std::string& dir, const POMDP* model, const Policy* pi_b) {
  D2Dataset d;
  d.meta = meta_from_json(json::parse(read_file(dir + "/meta.json"), nullptr, false));
  if (d.meta.kind != "d2") throw SchemaMismatch("not a D2 dataset");
  d.horizon = d.meta.horizon;
  const std::string bytes = read_file(dir + "/data.jsonl");
  const auto lines = split_lines(bytes);
  if (lines.size() != d.meta.n) throw SchemaMismatch("trajectory count differs from meta.json");
  for (const auto& line : lines) {
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw SchemaMismatch("malformed trajectory");
    try {
      D2Trajectory t;
      for (const auto& st : j.at("steps")) {
        t.obs.push_back(st.at(0).get<int>());
        t.acts.push_back(st.at(1).get<int>());
        t.rews.push_back(st.at(2).get<double>());
      }
      if (t.length() != d.horizon) throw SchemaMismatch("trajectory length differs from horizon");
      if (model)
        for (double r : t.rews)
          if (r < 0 || r > model->rmax) throw RewardOutOfRange("trajectory reward outside [0, rmax]");
      d.trajs.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw SchemaMismatch(e.what());
    }
  }
  check_hashes(d.meta, bytes, model, pi_b);
  if (model && pi_b) {
    for (const auto& t : d.trajs) {
      History tau({t.obs[0]});
      Eigen::VectorXd b;
      if (pi_b->needs_belief()) b = initial_belief(*model, t.obs[0]);
      for (int k = 0; k < t.length(); ++k) {
        checked_probs(*pi_b, tau, b);
        if (k + 1 == t.length()) break;
        if (pi_b->needs_belief()) b = belief_update(*model, b, t.acts[k], t.obs[k + 1]);
        tau = tau.extended(t.acts[k], t.obs[k + 1]);
      }
    }
  }
  return d;
}

}  // namespace bope
