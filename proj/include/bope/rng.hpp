#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace bope {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream for (master seed, stream index).
inline std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t stream) {
  std::seed_seq seq{splitmix64(master), splitmix64(master ^ splitmix64(stream + 1)), stream};
  return std::mt19937_64(seq);
}

/// Named sub-stream, e.g. "model", "data", "probes".
inline std::uint64_t named_stream(const char* name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const char* p = name; *p; ++p) h = (h ^ std::uint64_t(static_cast<unsigned char>(*p))) * 1099511628211ULL;
  return h;
}

template <typename Rng, typename Derived>
int sample_categorical(Rng& rng, const Eigen::MatrixBase<Derived>& p) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double u = u01(rng) * p.sum();
  const int n = int(p.size());
  int last = -1;
  for (int i = 0; i < n; ++i) {
    if (p(i) <= 0) continue;
    last = i;
    u -= p(i);
    if (u < 0) return i;
  }
  return last;
}

template <typename Rng>
Eigen::VectorXd sample_dirichlet(Rng& rng, int n, double alpha = 1.0) {
  std::gamma_distribution<double> g(alpha, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v / v.sum();
}

}  // namespace bope
