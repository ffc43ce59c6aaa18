#include "bope/alpha_vi.hpp"

#include <cmath>
#include <limits>

#include "bope/rng.hpp"

namespace bope {

namespace {

/// max cᵀy s.t. Ay ≤ rhs, y ≥ 0 with rhs ≥ 0; Bland's rule. Returns false when unbounded.
bool simplex_max(const Eigen::MatrixXd& A, const Eigen::VectorXd& rhs, const Eigen::VectorXd& c,
                 Eigen::VectorXd& y) {
  const int m = int(A.rows()), n = int(A.cols());
  Eigen::MatrixXd tab = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  tab.topLeftCorner(m, n) = A;
  tab.block(0, n, m, m).setIdentity();
  tab.col(n + m).head(m) = rhs;
  tab.row(m).head(n) = -c.transpose();
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;
  constexpr double eps = 1e-12;
  for (int iter = 0; iter < 100000; ++iter) {
    int enter = -1;
    for (int j = 0; j < n + m; ++j)
      if (tab(m, j) < -eps) {
        enter = j;
        break;
      }
    if (enter < 0) break;
    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (tab(i, enter) <= eps) continue;
      const double ratio = tab(i, n + m) / tab(i, enter);
      if (leave < 0 || ratio < best - eps || (std::abs(ratio - best) <= eps && basis[i] < basis[leave])) {
        best = ratio;
        leave = i;
      }
    }
    if (leave < 0) return false;
    tab.row(leave) /= tab(leave, enter);
    for (int i = 0; i <= m; ++i)
      if (i != leave && tab(i, enter) != 0) tab.row(i) -= tab(i, enter) * tab.row(leave);
    basis[leave] = enter;
  }
  y = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) y(basis[i]) = tab(i, n + m);
  return true;
}

bool same(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff() <= 1e-12;
}

// vertices, centroid and a fixed Dirichlet sample
Eigen::MatrixXd probe_beliefs(int S) {
  const int extra = 16 * S;
  Eigen::MatrixXd P(S, S + 1 + extra);
  P.leftCols(S).setIdentity();
  P.col(S).setConstant(1.0 / S);
  auto rng = make_stream(0x616c706861ULL, std::uint64_t(S));
  for (int k = 0; k < extra; ++k) P.col(S + 1 + k) = sample_dirichlet(rng, S, 1.0);
  return P;
}

}  // namespace

double AlphaSet::value(const Eigen::VectorXd& b) const {
  double v = -std::numeric_limits<double>::infinity();
  for (const auto& a : alphas) v = std::max(v, a.dot(b));
  return v;
}

double witness_lp(const Eigen::VectorXd& v, const std::vector<Eigen::VectorXd>& others,
                  Eigen::VectorXd* witness) {
  const int S = int(v.size());
  if (others.empty()) {
    if (witness) *witness = Eigen::VectorXd::Constant(S, 1.0 / S);
    return std::numeric_limits<double>::infinity();
  }
  // Variables y = (b₁..b_{S−1}, t) with b_S = 1 − Σb and d = t − K.
  const int nb = S - 1, m = int(others.size()) + 1;
  double K = 0;
  for (const auto& u : others) K = std::max(K, -(v(S - 1) - u(S - 1)));
  K += 1.0;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, nb + 1);
  Eigen::VectorXd rhs(m);
  for (std::size_t j = 0; j < others.size(); ++j) {
    const Eigen::VectorXd c = v - others[j];
    for (int i = 0; i < nb; ++i) A(Eigen::Index(j), i) = -(c(i) - c(S - 1));
    A(Eigen::Index(j), nb) = 1.0;
    rhs(Eigen::Index(j)) = c(S - 1) + K;
  }
  A.row(m - 1).head(nb).setOnes();
  rhs(m - 1) = 1.0;
  Eigen::VectorXd obj = Eigen::VectorXd::Zero(nb + 1);
  obj(nb) = 1.0;
  Eigen::VectorXd y;
  simplex_max(A, rhs, obj, y);
  if (witness) {
    witness->resize(S);
    witness->head(nb) = y.head(nb);
    (*witness)(S - 1) = std::max(0.0, 1.0 - y.head(nb).sum());
  }
  return y(nb) - K;
}

std::vector<Eigen::VectorXd> prune_alphas(const std::vector<Eigen::VectorXd>& W, double tol) {
  std::vector<Eigen::VectorXd> rest;
  for (const auto& v : W) {
    bool drop = false;
    for (const auto& u : rest)
      if (same(u, v) || (u.array() >= v.array() - 1e-15).all()) {
        drop = true;
        break;
      }
    if (drop) continue;
    std::vector<Eigen::VectorXd> keep;
    for (auto& u : rest)
      if (!(v.array() >= u.array() - 1e-15).all()) keep.push_back(std::move(u));
    keep.push_back(v);
    rest.swap(keep);
  }
  std::vector<Eigen::VectorXd> kept;
  if (rest.size() > 1) {
    const Eigen::MatrixXd P = probe_beliefs(int(rest.front().size()));
    std::vector<char> won(rest.size(), 0);
    for (Eigen::Index k = 0; k < P.cols(); ++k) {
      std::size_t best = 0;
      double bv = rest[0].dot(P.col(k));
      for (std::size_t i = 1; i < rest.size(); ++i) {
        const double val = rest[i].dot(P.col(k));
        if (val > bv + 1e-14) {
          bv = val;
          best = i;
        }
      }
      won[best] = 1;
    }
    std::vector<Eigen::VectorXd> left;
    for (std::size_t i = 0; i < rest.size(); ++i) (won[i] ? kept : left).push_back(std::move(rest[i]));
    rest.swap(left);
  }
  while (!rest.empty()) {
    Eigen::VectorXd b;
    const double d = witness_lp(rest.front(), kept, &b);
    if (d > tol) {
      std::size_t best = 0;
      double bv = rest[0].dot(b);
      for (std::size_t i = 1; i < rest.size(); ++i) {
        const double val = rest[i].dot(b);
        if (val > bv + 1e-14) {
          bv = val;
          best = i;
        }
      }
      kept.push_back(rest[best]);
      rest.erase(rest.begin() + std::ptrdiff_t(best));
    } else {
      rest.erase(rest.begin());
    }
  }
  return kept;
}

AlphaSet optimal_value_alpha(const POMDP& m, int depth, std::size_t max_vectors, double prune_tol) {
  const int S = m.n_states;
  std::vector<Eigen::VectorXd> V{Eigen::VectorXd::Zero(S)};
  const double disc = m.horizon ? 1.0 : m.gamma;
  AlphaSet out;
  for (int k = 1; k <= depth; ++k) {
    std::vector<Eigen::VectorXd> all;
    std::vector<int> acts;
    for (int a = 0; a < m.n_actions; ++a) {
      std::vector<Eigen::VectorXd> acc;
      for (int o = 0; o < m.n_obs; ++o) {
        std::vector<Eigen::VectorXd> G;
        for (const auto& alpha : V) {
          Eigen::VectorXd g;
          if (m.order == UpdateOrder::PredictFirst)
            g = m.transition[a] * m.emission.col(o).cwiseProduct(alpha);
          else
            g = m.emission.col(o).cwiseProduct(m.transition[a] * alpha);
          G.push_back(m.reward.col(a) / m.n_obs + disc * g);
        }
        G = prune_alphas(G, prune_tol);
        if (o == 0) {
          acc = G;
        } else {
          std::vector<Eigen::VectorXd> cross;
          cross.reserve(acc.size() * G.size());
          for (const auto& x : acc)
            for (const auto& y : G) cross.push_back(x + y);
          if (cross.size() > max_vectors * 50) throw TreeTooLarge("alpha cross-sum too large");
          acc = prune_alphas(cross, prune_tol);
        }
      }
      for (auto& x : acc) {
        all.push_back(std::move(x));
        acts.push_back(a);
      }
    }
    V = prune_alphas(all, prune_tol);
    out.prune_error = 2.0 * m.n_obs * prune_tol + disc * out.prune_error;
    if (V.size() > max_vectors) throw TreeTooLarge("alpha set exceeded the cap");
    if (k == depth) {
      out.alphas = V;
      for (const auto& v : V) {
        for (std::size_t i = 0; i < all.size(); ++i)
          if (same(all[i], v)) {
            out.actions.push_back(acts[i]);
            break;
          }
      }
    }
  }
  return out;
}

}  // namespace bope
