#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bope/belief.hpp"
#include "bope/policy.hpp"

namespace bope {

enum class D1Mode { IndependentRedraw, SharedReward };
const char* to_string(D1Mode m);

/// Law of the prefix length h: geometric P(h) ∝ γ^{h−1} or uniform, both on 1..max_h.
struct PrefixDist {
  enum class Kind { Geometric, Uniform };
  Kind kind = Kind::Geometric;
  double gamma = 0.9;
  int max_h = 10;

  std::vector<double> probs() const;  // index h−1
  std::string describe() const;
  static PrefixDist geometric(double gamma, int max_h) { return {Kind::Geometric, gamma, max_h}; }
  static PrefixDist uniform(int max_h) { return {Kind::Uniform, 0.0, max_h}; }
};

struct D1Record {
  int h = 1;
  History prefix;  // τ_h⁺
  int a = 0;
  double rA = 0, rB = 0;
  int oA = 0, oB = 0;
  D1Mode mode = D1Mode::IndependentRedraw;

  History next_A() const { return prefix.extended(a, oA); }
  History next_B() const { return prefix.extended(a, oB); }
  bool operator==(const D1Record&) const = default;
};

struct D2Trajectory {
  std::vector<int> obs, acts;
  std::vector<double> rews;

  int length() const { return int(obs.size()); }
  bool operator==(const D2Trajectory&) const = default;
};

struct DatasetMeta {
  std::string kind;  // "d1" or "d2"
  std::string model_hash;
  std::string policy_hash;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string prefix_dist;  // d1
  std::string mode;         // d1
  int horizon = 0;          // d2
  std::string generator_version = "1";
  std::string data_hash;
};

struct D1Dataset {
  DatasetMeta meta;
  std::vector<D1Record> records;
};

struct D2Dataset {
  DatasetMeta meta;
  int horizon = 0;
  std::vector<D2Trajectory> trajs;
};

D1Dataset gen_d1(const POMDP& m, const Policy& pi_b, std::size_t n, const PrefixDist& prefix,
                 D1Mode mode, std::uint64_t seed, int workers = 1);
D2Dataset gen_d2(const POMDP& m, const Policy& pi_b, std::size_t n, int H, std::uint64_t seed,
                 int workers = 1);

/// Writes <dir>/data.jsonl and <dir>/meta.json.
void save(const D1Dataset& d, const std::string& dir);
void save(const D2Dataset& d, const std::string& dir);
/// Validates the sidecar; model/policy hashes are checked when supplied.
D1Dataset load_d1(const std::string& dir, const POMDP* model = nullptr, const Policy* pi_b = nullptr);
D2Dataset load_d2(const std::string& dir, const POMDP* model = nullptr, const Policy* pi_b = nullptr);

std::string d1_jsonl(const std::vector<D1Record>& r);
std::string d2_jsonl(const std::vector<D2Trajectory>& t);

}  // namespace bope
