#pragma once

#include <Eigen/Dense>

#include <vector>

namespace bope {

/// Finite MDP with explicit transition matrices; used for abstract MDPs and the telescoping check.
template <typename Scalar = double>
struct ExplicitMDP {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  int n_states = 0;
  int n_actions = 0;
  std::vector<Matrix> P;  // per action, |X|x|X|
  Matrix r;               // |X|x|A|
  Vector d0;
  Scalar gamma = Scalar(0.9);
};

/// Policy as an |X|x|A| row-stochastic matrix.
template <typename Scalar>
using PolicyMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
typename ExplicitMDP<Scalar>::Matrix transition_under(const ExplicitMDP<Scalar>& m,
                                                      const PolicyMatrix<Scalar>& pi) {
  typename ExplicitMDP<Scalar>::Matrix Ppi = ExplicitMDP<Scalar>::Matrix::Zero(m.n_states, m.n_states);
  for (int a = 0; a < m.n_actions; ++a) Ppi += pi.col(a).asDiagonal() * m.P[a];
  return Ppi;
}

/// V^π = (I − γP_π)⁻¹ r_π
template <typename Scalar>
typename ExplicitMDP<Scalar>::Vector evaluate_v(const ExplicitMDP<Scalar>& m,
                                                const PolicyMatrix<Scalar>& pi) {
  using Matrix = typename ExplicitMDP<Scalar>::Matrix;
  const Matrix A = Matrix::Identity(m.n_states, m.n_states) - m.gamma * transition_under(m, pi);
  const typename ExplicitMDP<Scalar>::Vector rpi = m.r.cwiseProduct(pi).rowwise().sum();
  return A.partialPivLu().solve(rpi);
}

/// Q^π(x,a) = r(x,a) + γ Σ P(x′|x,a) V^π(x′)
template <typename Scalar>
typename ExplicitMDP<Scalar>::Matrix evaluate_q(const ExplicitMDP<Scalar>& m,
                                                const PolicyMatrix<Scalar>& pi) {
  const auto V = evaluate_v(m, pi);
  typename ExplicitMDP<Scalar>::Matrix Q(m.n_states, m.n_actions);
  for (int a = 0; a < m.n_actions; ++a) Q.col(a) = m.r.col(a) + m.gamma * (m.P[a] * V);
  return Q;
}

/// 𝒯^π Q
template <typename Scalar>
typename ExplicitMDP<Scalar>::Matrix bellman(const ExplicitMDP<Scalar>& m,
                                             const PolicyMatrix<Scalar>& pi,
                                             const typename ExplicitMDP<Scalar>::Matrix& Q) {
  const typename ExplicitMDP<Scalar>::Vector v = Q.cwiseProduct(pi).rowwise().sum();
  typename ExplicitMDP<Scalar>::Matrix out(m.n_states, m.n_actions);
  for (int a = 0; a < m.n_actions; ++a) out.col(a) = m.r.col(a) + m.gamma * (m.P[a] * v);
  return out;
}

/// Normalised discounted occupancy d^π(x,a) = (1−γ) Σ_k γ^{k−1} Pr(x_k = x, a_k = a).
template <typename Scalar>
typename ExplicitMDP<Scalar>::Matrix occupancy(const ExplicitMDP<Scalar>& m,
                                               const PolicyMatrix<Scalar>& pi) {
  using Matrix = typename ExplicitMDP<Scalar>::Matrix;
  const Matrix A = Matrix::Identity(m.n_states, m.n_states) -
                   m.gamma * transition_under(m, pi).transpose();
  const typename ExplicitMDP<Scalar>::Vector ds = (Scalar(1) - m.gamma) * A.partialPivLu().solve(m.d0);
  return ds.asDiagonal() * pi;
}

/// J_Q(π) = E_{x∼d0}[Q(x, π)]
template <typename Scalar>
Scalar j_of_q(const ExplicitMDP<Scalar>& m, const PolicyMatrix<Scalar>& pi,
              const typename ExplicitMDP<Scalar>::Matrix& Q) {
  return m.d0.dot(Q.cwiseProduct(pi).rowwise().sum());
}

}  // namespace bope
