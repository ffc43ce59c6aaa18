#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "bope/dataset.hpp"
#include "bope/generators.hpp"
#include "bope/json_io.hpp"
#include "bope/oracles.hpp"

using namespace bope;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bope_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const POMDP& model() {
  static const POMDP m = random_dense(ModelShape{2, 2, 3, 0.9, std::nullopt, 1.0}, 31);
  return m;
}

}  // namespace

TEST_CASE("prefix laws") {
  const auto g = PrefixDist::geometric(0.5, 3).probs();
  CHECK(g[0] == doctest::Approx(4.0 / 7));
  CHECK(g[2] == doctest::Approx(1.0 / 7));
  const auto u = PrefixDist::uniform(4).probs();
  for (double p : u) CHECK(p == doctest::Approx(0.25));
  CHECK_THROWS_AS(PrefixDist::uniform(0).probs(), BadSpec);
}

TEST_CASE("generation does not depend on the worker count") {
  const Policy pi = random_memoryless(3, 2, 1);
  const auto prefix = PrefixDist::geometric(0.9, 5);
  const D1Dataset a = gen_d1(model(), pi, 10000, prefix, D1Mode::IndependentRedraw, 7, 1);
  const D1Dataset b = gen_d1(model(), pi, 10000, prefix, D1Mode::IndependentRedraw, 7, 3);
  CHECK(a.records == b.records);
  CHECK(a.meta.data_hash == b.meta.data_hash);
  const D1Dataset c = gen_d1(model(), pi, 10000, prefix, D1Mode::IndependentRedraw, 8, 1);
  CHECK(c.meta.data_hash != a.meta.data_hash);
  POMDP fh = model();
  fh.horizon = 4;
  fh.gamma = 1.0;
  CHECK(gen_d2(fh, pi, 9000, 4, 5, 1).trajs == gen_d2(fh, pi, 9000, 4, 5, 4).trajs);
}

TEST_CASE("save and load round trip with hash checks") {
  const Policy pi = random_memoryless(3, 2, 2);
  const D1Dataset d = gen_d1(model(), pi, 500, PrefixDist::uniform(3), D1Mode::SharedReward, 9);
  const fs::path dir = scratch("d1");
  save(d, dir.string());
  const D1Dataset back = load_d1(dir.string(), &model(), &pi);
  CHECK(back.records == d.records);
  CHECK(back.meta.mode == "shared-reward");

  const POMDP other = random_dense(ModelShape{2, 2, 3, 0.9, std::nullopt, 1.0}, 32);
  CHECK_THROWS_AS(load_d1(dir.string(), &other), HashMismatch);
  const Policy uniform = Policy::uniform(2);
  CHECK_THROWS_AS(load_d1(dir.string(), nullptr, &uniform), HashMismatch);

  std::string bytes = read_file((dir / "data.jsonl").string());
  bytes[bytes.find(':') + 1] = '9';
  write_file((dir / "data.jsonl").string(), bytes);
  CHECK_THROWS_AS(load_d1(dir.string()), HashMismatch);

  write_file((dir / "meta.json").string(), "{\"kind\": 3}");
  CHECK_THROWS_AS(load_d1(dir.string()), SchemaMismatch);
}

TEST_CASE("D2 save and load") {
  POMDP fh = model();
  fh.horizon = 3;
  fh.gamma = 1.0;
  const Policy pi = random_memoryless(3, 2, 3);
  const D2Dataset d = gen_d2(fh, pi, 300, 3, 4);
  const fs::path dir = scratch("d2");
  save(d, dir.string());
  const D2Dataset back = load_d2(dir.string(), &fh, &pi);
  CHECK(back.trajs == d.trajs);
  CHECK(back.horizon == 3);
  CHECK_THROWS_AS(load_d1(dir.string()), SchemaMismatch);
}

TEST_CASE("behavior policy without full support is rejected") {
  Eigen::MatrixXd by_obs(3, 2);
  by_obs << 1, 0, 0.5, 0.5, 0.5, 0.5;
  CHECK_THROWS_AS(gen_d1(model(), Policy::memoryless(by_obs), 100, PrefixDist::uniform(2),
                         D1Mode::IndependentRedraw, 1),
                  SupportViolation);
}

TEST_CASE("shared-reward mode copies the reward") {
  const D1Dataset d =
      gen_d1(model(), Policy::uniform(2), 2000, PrefixDist::uniform(3), D1Mode::SharedReward, 11);
  for (const auto& r : d.records) CHECK(r.rA == r.rB);
  const D1Dataset e =
      gen_d1(model(), Policy::uniform(2), 2000, PrefixDist::uniform(3), D1Mode::IndependentRedraw, 11);
  int differ = 0;
  for (const auto& r : e.records) differ += r.rA != r.rB;
  CHECK(differ > 0);
}

TEST_CASE("successor observations follow the predictive law") {
  const POMDP& m = model();
  const Policy pi = random_memoryless(3, 2, 5, 0.2);
  const std::size_t n = 60000;
  const D1Dataset d = gen_d1(m, pi, n, PrefixDist::uniform(1), D1Mode::IndependentRedraw, 12);
  std::map<std::tuple<int, int, int>, double> countA, countB;
  for (const auto& r : d.records) {
    CHECK(r.h == 1);
    countA[{r.prefix.seq[0], r.a, r.oA}] += 1;
    countB[{r.prefix.seq[0], r.a, r.oB}] += 1;
  }
  const Eigen::VectorXd p1 = initial_obs_dist(m);
  for (int o1 = 0; o1 < m.n_obs; ++o1) {
    const Eigen::VectorXd b = initial_belief(m, o1);
    for (int a = 0; a < m.n_actions; ++a) {
      const Eigen::VectorXd po = obs_predictive(m, b, a);
      for (int o = 0; o < m.n_obs; ++o) {
        const double p = p1(o1) * pi.by_obs(o1, a) * po(o);
        const double sd = std::sqrt(p * (1 - p) / double(n));
        CHECK(std::abs(countA[{o1, a, o}] / double(n) - p) < 5 * sd);
        CHECK(std::abs(countB[{o1, a, o}] / double(n) - p) < 5 * sd);
      }
    }
  }
}

TEST_CASE("D2 mean return matches the exact value of the behavior policy") {
  POMDP fh = model();
  fh.horizon = 3;
  fh.gamma = 1.0;
  const Policy pi = random_memoryless(3, 2, 6);
  const std::size_t n = 40000;
  const D2Dataset d = gen_d2(fh, pi, n, 3, 13);
  double s = 0, s2 = 0;
  for (const auto& t : d.trajs) {
    double g = 0;
    for (double r : t.rews) g += r;
    s += g;
    s2 += g * g;
  }
  const double mean = s / double(n);
  const double sd = std::sqrt((s2 / double(n) - mean * mean) / double(n));
  CHECK(std::abs(mean - exact_value(fh, pi, 3).J) < 5 * sd);
}
