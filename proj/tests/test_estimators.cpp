#include <doctest.h>

#include <cmath>

#include "bope/ds_estimator.hpp"
#include "bope/experiment.hpp"
#include "bope/fdvf.hpp"
#include "bope/generators.hpp"
#include "bope/oracles.hpp"
#include "bope/short_memory.hpp"
#include "bope/stability.hpp"

using namespace bope;

namespace {

struct DsCase {
  POMDP m = reset_dynamics(ModelShape{2, 2, 2, 0.9, std::nullopt, 1.0}, 7);
  Policy pi_e = random_belief_linear(2, 2, 11);
  Policy pi_b = random_memoryless(2, 2, 13, 0.2);
  PrefixDist prefix = PrefixDist::geometric(0.9, 3);
  DsFixture fx = build_ds_fixture(m, pi_e, pi_b, prefix, 1e-9);
};

const DsCase& ds_case() {
  static const DsCase c;
  return c;
}

POMDP finite_model(std::uint64_t seed, int H) {
  return random_dense(ModelShape{2, 2, 2, 1.0, H, 1.0}, seed);
}

}  // namespace

TEST_CASE("double-sampling loss of the zero table is the mean reward product") {
  const DsCase& c = ds_case();
  const D1Dataset d = gen_d1(c.m, c.pi_b, 3000, c.prefix, D1Mode::IndependentRedraw, 3);
  const DsContext ctx{&c.m, &c.fx.graph, &c.pi_e, &c.fx.phi};
  const FunctionTable zero =
      FunctionTable::table(DomainKind::AbstractStateAction, Eigen::MatrixXd::Zero(c.fx.phi.n_reps(), 2));
  double s = 0;
  for (const auto& r : d.records) s += r.rA * r.rB;
  CHECK(ds_loss(zero, d, EstimationMode::Abstract, ctx) == doctest::Approx(s / double(d.records.size())));
}

TEST_CASE("double-sampling fit ties to the lowest index and prefers the exact Q") {
  const DsCase& c = ds_case();
  const D1Dataset d = gen_d1(c.m, c.pi_b, 20000, c.prefix, D1Mode::IndependentRedraw, 4);
  const DsContext ctx{&c.m, &c.fx.graph, &c.pi_e, &c.fx.phi};
  const FunctionTable Q = FunctionTable::table(DomainKind::AbstractStateAction, c.fx.Q_phi, 10.0);
  FunctionTable off = Q;
  off.values.array() += 0.5;

  const EstimateResult single = ds_fit(FunctionClass{{off}}, d, EstimationMode::Abstract, ctx);
  CHECK(single.chosen_index == 0);
  CHECK(ds_fit(FunctionClass{{off, Q, Q}}, d, EstimationMode::Abstract, ctx).chosen_index == 1);
  const EstimateResult r = ds_fit(FunctionClass{{Q, off}}, d, EstimationMode::Abstract, ctx);
  CHECK(r.chosen_index == 0);
  CHECK(r.losses[0] < r.losses[1]);
  CHECK(r.J_hat == doctest::Approx(c.fx.J_phi).epsilon(1e-9));
}

TEST_CASE("true-space and abstract modes agree on lifted tables") {
  const DsCase& c = ds_case();
  const D1Dataset d = gen_d1(c.m, c.pi_b, 5000, c.prefix, D1Mode::IndependentRedraw, 5);
  const DsContext ctx{&c.m, &c.fx.graph, &c.pi_e, &c.fx.phi};
  const FunctionTable fa = FunctionTable::table(DomainKind::AbstractStateAction, c.fx.Q_phi);
  const FunctionTable ft = FunctionTable::table(DomainKind::HistoryAction, lift(c.fx.Q_phi, c.fx.phi));
  CHECK(ds_loss(ft, d, EstimationMode::TrueSpace, ctx) ==
        doctest::Approx(ds_loss(fa, d, EstimationMode::Abstract, ctx)).epsilon(1e-9));
}

TEST_CASE("empirical loss stays within the Hoeffding band of the population loss") {
  const DsCase& c = ds_case();
  const std::size_t n = 20000;
  const D1Dataset d = gen_d1(c.m, c.pi_b, n, c.prefix, D1Mode::IndependentRedraw, 6);
  const DsContext ctx{&c.m, &c.fx.graph, &c.pi_e, &c.fx.phi};
  const double band = hoeffding_band(c.m.rmax, c.m.gamma, double(n), 0.01);
  for (double shift : {0.0, 0.2, -0.4}) {
    Eigen::MatrixXd f = c.fx.Q_phi;
    f.array() += shift;
    const double emp = ds_loss(FunctionTable::table(DomainKind::AbstractStateAction, f), d, EstimationMode::Abstract, ctx);
    CHECK(std::abs(emp - ds_population_loss(f, c.fx.amdp.mdp, c.fx.pi_phi, c.fx.dD)) <= band);
  }
}

TEST_CASE("double-sampling bound arithmetic") {
  const double R = 1, g = 0.9, C = 2, delta = 0.05, F = 8, L_Q = 3, L_pi = 0.5, L_V = 4;
  const double h = 1 - g, lg = std::log(2 * F / delta);
  const DsBound b = compute_bound_ds(C, 1000, delta, F, R, g, L_Q, L_pi, L_V, 0.0);
  CHECK(b.stat_term == doctest::Approx(std::sqrt(32 * std::pow(R, 4) * lg / (1000 * std::pow(h, 4)))));
  CHECK(b.value == doctest::Approx(std::sqrt(C) / h * std::sqrt(b.stat_term)));
  CHECK(b.L_E == doctest::Approx(8 * R / h * ((1 + g) * L_Q + R / h)));
  CHECK(b.L_phi == doctest::Approx(compute_Lphi1(L_pi, L_V, R, g) + R / h + L_Q));
  CHECK(compute_bound_ds(C, 4000, delta, F, R, g, L_Q, L_pi, L_V, 0.0).stat_term ==
        doctest::Approx(b.stat_term / 2));
  CHECK(compute_bound_ds(C, 16000, delta, F, R, g, L_Q, L_pi, L_V, 0.0).cor1_bound ==
        doctest::Approx(b.cor1_bound / 2));
  CHECK(b.cor1_eps == doctest::Approx(b.stat_term / b.L_E));
  CHECK(b.cor1_n_min == doctest::Approx(8 * std::pow(R, 4) * std::pow(b.L_phi / b.L_E, 4) * lg));

  double prev = 1e300;
  for (double n : {1e3, 1e4, 1e5, 1e6}) {
    const double v = compute_bound_ds(C, n, delta, F, R, g, L_Q, L_pi, L_V, 0.01).value;
    CHECK(v < prev);
    prev = v;
  }
  // past the sample threshold the bound at the corollary radius sits under its closed form
  const double n_big = 2 * b.cor1_n_min;
  const DsBound big = compute_bound_ds(C, n_big, delta, F, R, g, L_Q, L_pi, L_V, 0.0);
  CHECK(big.cor1_applicable);
  CHECK(compute_bound_ds(C, n_big, delta, F, R, g, L_Q, L_pi, L_V, big.cor1_eps).value <= big.cor1_bound * (1 + 1e-12));
  CHECK(hoeffding_band(R, g, 100, delta, 4) ==
        doctest::Approx(std::sqrt(8 / (100 * std::pow(h, 4)) * std::log(8 / delta))));
}

TEST_CASE("class JSON round trip and validation") {
  FunctionTable f = FunctionTable::table(DomainKind::AbstractStateAction, Eigen::MatrixXd::Constant(3, 2, 0.5), 1.0);
  const FunctionClass F = perturbation_class(f, {0.1, -0.2}, 9, 0.0, 1.0);
  CHECK(F.size() == 3);
  const FunctionClass back = class_from_json(class_to_json(F));
  REQUIRE(back.size() == F.size());
  for (std::size_t k = 0; k < F.size(); ++k) CHECK(back.members[k].values == F.members[k].values);
  CHECK_THROWS_AS(class_from_json(nlohmann::json{{"members", 4}}), SchemaMismatch);

  FunctionTable big = f;
  big.values(0, 0) = 3.0;
  CHECK_THROWS_AS(big.validate(), DomainMismatch);
  const FunctionTable other = FunctionTable::table(DomainKind::AbstractStateAction, Eigen::MatrixXd::Zero(4, 2));
  CHECK_THROWS_AS((FunctionClass{{f, other}}.validate()), DomainMismatch);
  CHECK_THROWS_AS(FunctionClass{}.validate(), BadSpec);
}

TEST_CASE("FDVF inner objective basics") {
  const int H = 3;
  const POMDP m = finite_model(21, H);
  const Policy pi_b = random_memoryless(2, 2, 22, 0.1), pi_e = random_memoryless(2, 2, 23, 0.1);
  const MuSpec same{&m, &pi_b, &pi_b};
  const D2Dataset d = gen_d2(m, pi_b, 2000, H, 24);
  for (const auto& t : d.trajs)
    for (int h = 1; h <= H; ++h) CHECK(same.mu(h, t.obs, t.acts) == 1.0);

  const FdvfDomain dom(H, 2, 2, 1);
  const FunctionTable V = fdvf_v_table(dom, Eigen::VectorXd::LinSpaced(dom.v_size(), -1, 2));
  const FunctionTable zero = fdvf_theta_table(dom, Eigen::VectorXd::Zero(dom.theta_size()));
  const MuSpec mu{&m, &pi_e, &pi_b};
  CHECK(fdvf_inner(V, zero, d, mu) == 0.0);
  const FunctionTable theta = fdvf_theta_table(dom, Eigen::VectorXd::LinSpaced(dom.theta_size(), 1, -1));
  FdvfOptions full;
  full.truncation_T = H;
  CHECK(fdvf_inner(V, theta, d, mu, full) == fdvf_inner(V, theta, d, mu));

  const EstimateResult r = fdvf_fit(FunctionClass{{V, V}}, FunctionClass{{zero}}, d, mu);
  CHECK(r.chosen_index == 0);
  CHECK(r.losses[0] == 0.0);
}

TEST_CASE("population inner maximum equals half the mean squared residual") {
  const int H = 2;
  const POMDP m = finite_model(25, H);
  const Policy pi_b = random_memoryless(2, 2, 26, 0.1), pi_e = random_memoryless(2, 2, 27, 0.1);
  const MuSpec mu{&m, &pi_e, &pi_b};
  const FdvfDomain dom(H, 2, 2, H);
  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(dom.v_size(), -0.5, 1.5);
  const FunctionTable V = fdvf_v_table(dom, v);
  const auto res = bellman_residual_H(m, pi_e, pi_b, V);
  double gap = -1;
  const FunctionTable th = residual_theta_table(res, dom, &gap);
  CHECK(gap == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fdvf_population_max(V, dom, mu, H) == doctest::Approx(half_mean_square(res)).epsilon(1e-10));
  CHECK(fdvf_population_inner(V, th, mu, H) == doctest::Approx(half_mean_square(res)).epsilon(1e-10));
}

TEST_CASE("realizing V recovers the exact value") {
  const int H = 3;
  const POMDP m = finite_model(28, H);
  const Policy pi_b = random_memoryless(2, 2, 29, 0.1), pi_e = random_memoryless(2, 2, 30, 0.1);
  const FdvfSolution sol = solve_fdvf(m, pi_e, pi_b, 1);
  CHECK(sol.residual < 1e-9);
  const double J = exact_value(m, pi_e, H).J;
  CHECK(sol.J == doctest::Approx(J).epsilon(1e-10));
  CHECK(fdvf_estimate_exact(sol.V, m, pi_b, H) == doctest::Approx(J).epsilon(1e-9));

  const D2Dataset d = gen_d2(m, pi_b, 20000, H, 31);
  double s = 0, s2 = 0;
  const FdvfDomain dom = FdvfDomain::of(sol.V);
  for (const auto& t : d.trajs) {
    const double v = sol.V.values(dom.v_index(1, t.obs, t.acts), 0);
    s += v;
    s2 += v * v;
  }
  const double n = double(d.trajs.size()), mean = s / n;
  CHECK(fdvf_estimate(sol.V, d) == doctest::Approx(mean));
  CHECK(std::abs(mean - J) < 4 * std::sqrt((s2 / n - mean * mean) / n) + 1e-12);
  const MuSpec mu{&m, &pi_e, &pi_b};
  CHECK(std::abs(fdvf_population_max(sol.V, FdvfDomain(H, 2, 2, 1), mu, H)) < 1e-18);
}

TEST_CASE("short-memory importance weight") {
  const int H = 3;
  const POMDP m = finite_model(32, H);
  const Policy pi_b = random_memoryless(2, 2, 33, 0.1);
  const D2Dataset d = gen_d2(m, pi_b, 200, H, 34);
  const ShortMemoryPOMDP full = build_short_memory_pomdp(m, H);
  for (const auto& t : d.trajs) CHECK(importance_weight_wphiT(m, full, pi_b, pi_b, t) == doctest::Approx(1.0).epsilon(1e-12));

  // with T = 1 only the last step's observation probability changes
  const ShortMemoryPOMDP sm = build_short_memory_pomdp(m, 1);
  for (std::size_t k = 0; k < 20; ++k) {
    const D2Trajectory& t = d.trajs[k];
    const Eigen::VectorXd b_full = belief_of_history(m, History({t.obs[0], t.acts[0], t.obs[1]}));
    const Eigen::VectorXd b_win = initial_belief(m, t.obs[1]);
    const double expect = obs_predictive(m, b_win, t.acts[1])(t.obs[2]) / obs_predictive(m, b_full, t.acts[1])(t.obs[2]);
    CHECK(importance_weight_wphiT(m, sm, pi_b, pi_b, t) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("FDVF bound arithmetic") {
  CHECK(fdvf_default_c(1.0) == doctest::Approx(1406 + std::sqrt(80736.0)));
  const double c = fdvf_default_c();
  const double b0 = compute_bound_fdvf(1.5, 1000, 0.1, 3, 3, 4, 8, 8, 2, 5, 0.0, c);
  CHECK(b0 == doctest::Approx(std::sqrt(3.0) * 1.5 * std::sqrt(c * 3 * 9 * 4 / 1000.0 * std::log(640.0))));
  CHECK(compute_bound_fdvf(1.5, 4000, 0.1, 3, 3, 4, 8, 8, 2, 5, 0.0, c) == doctest::Approx(b0 / 2));
  CHECK(compute_bound_fdvf(1.5, 1000, 0.1, 3, 3, 4, 8, 8, 2, 5, 0.01, c) > b0);
  CHECK(fdvf_L_phi_tight(1, 3, 0.5, 2) == doctest::Approx(1.5 + 4.5 + 2));
}
