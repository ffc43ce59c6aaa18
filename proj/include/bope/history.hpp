#pragma once

#include <string>
#include <vector>

namespace bope {

/// Alternating sequence o₁,a₁,o₂,…; odd length means it ends in an observation (τ⁺).
struct History {
  std::vector<int> seq;

  History() = default;
  explicit History(std::vector<int> s) : seq(std::move(s)) {}

  bool empty() const { return seq.empty(); }
  bool ends_with_obs() const { return seq.size() % 2 == 1; }
  /// Number of observations for τ⁺, or index h of the next observation for τ.
  int h() const { return ends_with_obs() ? int(seq.size() + 1) / 2 : int(seq.size()) / 2 + 1; }
  int last_obs() const { return seq[seq.size() - (ends_with_obs() ? 1 : 2)]; }

  History extended(int a, int o) const {
    History r = *this;
    r.seq.push_back(a);
    r.seq.push_back(o);
    return r;
  }
  History with_action(int a) const {
    History r = *this;
    r.seq.push_back(a);
    return r;
  }
  History with_obs(int o) const {
    History r = *this;
    r.seq.push_back(o);
    return r;
  }

  /// Last-T window: T observations and T−1 actions for τ⁺, T (o,a) pairs for τ.
  History window(int T) const {
    const std::size_t len = ends_with_obs() ? std::size_t(2 * T - 1) : std::size_t(2 * T);
    if (len >= seq.size()) return *this;
    return History(std::vector<int>(seq.end() - std::ptrdiff_t(len), seq.end()));
  }

  std::string key() const {
    std::string s;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (i) s += '-';
      s += std::to_string(seq[i]);
    }
    return s;
  }

  static History parse(const std::string& key) {
    History h;
    if (key.empty()) return h;
    std::size_t pos = 0;
    while (pos <= key.size()) {
      std::size_t next = key.find('-', pos);
      if (next == std::string::npos) next = key.size();
      h.seq.push_back(std::stoi(key.substr(pos, next - pos)));
      pos = next + 1;
    }
    return h;
  }

  bool operator==(const History&) const = default;
  auto operator<=>(const History&) const = default;
};

/// Future part f′_h = (o_h,a_h,…,o_H,a_H) together with the history τ_h it extends.
struct Future {
  std::vector<int> seq;
  History attached;

  bool consistent(int H) const {
    return seq.size() % 2 == 0 && !attached.ends_with_obs() &&
           int(seq.size() + attached.seq.size()) == 2 * H;
  }
};

}  // namespace bope
