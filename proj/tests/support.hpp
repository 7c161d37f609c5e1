#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "vgame/grid.hpp"

namespace vgame::testing_support {

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng,
                                     double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd M(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) M(i, j) = normal(rng);
  return M;
}

inline NodeVectors random_vectors(std::size_t nodes, Eigen::Index dim, std::mt19937_64& rng,
                                  double scale = 1.0) {
  NodeVectors v;
  v.reserve(nodes);
  for (std::size_t i = 0; i < nodes; ++i) v.push_back(random_matrix(dim, 1, rng, scale));
  return v;
}

// Smooth random per-node vectors: a + b t + c sin(3t).
inline NodeVectors smooth_vectors(const TimeGrid& g, Eigen::Index dim, std::mt19937_64& rng,
                                  double scale = 1.0) {
  const Eigen::VectorXd a = random_matrix(dim, 1, rng, scale);
  const Eigen::VectorXd b = random_matrix(dim, 1, rng, scale);
  const Eigen::VectorXd c = random_matrix(dim, 1, rng, scale);
  NodeVectors v;
  for (double t : g.nodes()) v.push_back(a + b * t + c * std::sin(3.0 * t));
  return v;
}

inline Kernel1 smooth_kernel1(const TimeGrid& g, Eigen::Index r, Eigen::Index c,
                              std::mt19937_64& rng, double scale = 1.0) {
  const Eigen::MatrixXd a = random_matrix(r, c, rng, scale);
  const Eigen::MatrixXd b = random_matrix(r, c, rng, scale);
  Kernel1 K(g.size(), r, c);
  for (std::size_t i = 0; i < g.size(); ++i) K.at(i) = a + b * std::cos(2.0 * g.node(i));
  return K;
}

inline Kernel2 smooth_kernel2(const TimeGrid& g, Eigen::Index r, Eigen::Index c,
                              std::mt19937_64& rng, double scale = 1.0) {
  const Eigen::MatrixXd a = random_matrix(r, c, rng, scale);
  const Eigen::MatrixXd b = random_matrix(r, c, rng, scale);
  const Eigen::MatrixXd d = random_matrix(r, c, rng, scale);
  Kernel2 K(g.size(), r, c);
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j)
      K.at(i, j) = a + b * std::sin(g.node(i) - 2.0 * g.node(j)) + d * g.node(i) * g.node(j);
  return K;
}

// Symmetric per node: K(t) = Kᵀ(t).
inline Kernel1 symmetric_kernel1(const TimeGrid& g, Eigen::Index d, std::mt19937_64& rng,
                                 double scale = 1.0) {
  Kernel1 K = smooth_kernel1(g, d, d, rng, scale);
  for (std::size_t i = 0; i < g.size(); ++i) K.at(i) = 0.5 * (K.at(i) + K.at(i).transpose()).eval();
  return K;
}

// L(x, y) = L(y, x)ᵀ.
inline Kernel2 symmetric_kernel2(const TimeGrid& g, Eigen::Index d, std::mt19937_64& rng,
                                 double scale = 1.0) {
  const Kernel2 raw = smooth_kernel2(g, d, d, rng, scale);
  Kernel2 L(g.size(), d, d);
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j)
      L.at(i, j) = 0.5 * (raw.at(i, j) + raw.at(j, i).transpose());
  return L;
}

inline double max_abs(const Eigen::MatrixXd& M) { return M.cwiseAbs().maxCoeff(); }

}  // namespace vgame::testing_support

#include "vgame/quadform.hpp"

namespace vgame::testing_support {

// Random form with (K11, L11) jointly PD and (K22, L22) jointly ND by a
// diagonal margin; couplings are kept weak so alternating best response
// contracts.
inline BlockQuadraticForm random_certified_form(const TimeGrid& g, Eigen::Index m,
                                                Eigen::Index n, std::mt19937_64& rng) {
  for (;;) {
    BlockQuadraticForm f{g,
                         symmetric_kernel1(g, m, rng, 0.3),
                         symmetric_kernel1(g, n, rng, 0.3),
                         smooth_kernel1(g, m, n, rng, 0.2),
                         symmetric_kernel2(g, m, rng, 0.3),
                         symmetric_kernel2(g, n, rng, 0.3),
                         smooth_kernel2(g, m, n, rng, 0.2),
                         smooth_vectors(g, m, rng),
                         smooth_vectors(g, n, rng)};
    for (std::size_t i = 0; i < g.size(); ++i) {
      f.K11.at(i) += 2.0 * Eigen::MatrixXd::Identity(m, m);
      f.K22.at(i) = (-f.K22.at(i) - 2.0 * Eigen::MatrixXd::Identity(n, n)).eval();
    }
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < g.size(); ++j) f.L22.at(i, j) = -f.L22.at(i, j);
    if (certify(f).certified()) return f;
  }
}

inline ControlPair random_pair(std::size_t nodes, Eigen::Index m, Eigen::Index n,
                               std::mt19937_64& rng, double scale = 1.0) {
  return ControlPair{random_vectors(nodes, m, rng, scale), random_vectors(nodes, n, rng, scale)};
}

inline ControlPair add(const ControlPair& a, const ControlPair& b, double s = 1.0) {
  ControlPair out = a;
  for (std::size_t i = 0; i < a.w1.size(); ++i) out.w1[i] += s * b.w1[i];
  for (std::size_t i = 0; i < a.w2.size(); ++i) out.w2[i] += s * b.w2[i];
  return out;
}

// Alternating best response w1 ← argmin E(·, w2), w2 ← argmax E(w1, ·).
inline ControlPair alternating_best_response(const BlockQuadraticForm& f, ControlPair w,
                                             int max_iter = 500, double tol = 1e-13) {
  for (int it = 0; it < max_iter; ++it) {
    const NodeVectors w1 = best_response_min(f, w.w2);
    const NodeVectors w2 = best_response_max(f, w1);
    const double change = std::max(max_abs_diff(w1, w.w1), max_abs_diff(w2, w.w2));
    w = ControlPair{w1, w2};
    if (change < tol) break;
  }
  return w;
}

}  // namespace vgame::testing_support

#include "vgame/lqgame.hpp"

namespace vgame::testing_support {

inline Kernel2 negated(const Kernel2& K) {
  Kernel2 out = K;
  for (std::size_t i = 0; i < K.size(); ++i)
    for (std::size_t j = 0; j < K.size(); ++j) out.at(i, j) = -K.at(i, j);
  return out;
}

// Nonnegative-definite kernel Σₖ gₖ(x) gₖ(y)ᵀ.
inline Kernel2 gram_kernel(const TimeGrid& g, Eigen::Index d, std::mt19937_64& rng,
                           double scale = 1.0, int rank = 2) {
  Kernel2 L = Kernel2::constant(g.size(), Eigen::MatrixXd::Zero(d, d));
  for (int k = 0; k < rank; ++k) {
    const NodeVectors f = smooth_vectors(g, d, rng, scale);
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < g.size(); ++j) L.at(i, j) += f[i] * f[j].transpose();
  }
  return L;
}

inline Eigen::MatrixXd psd_matrix(Eigen::Index d, std::mt19937_64& rng, double scale = 1.0) {
  const Eigen::MatrixXd G = random_matrix(d, d, rng, scale);
  return G * G.transpose();
}

// Random LQ game whose assembled form is certified: Q1 ≻ 0 and R1 ≺ 0 with a
// margin against the state-induced terms.
inline LQGameProblem random_lq_problem(const TimeGrid& g, Eigen::Index p, Eigen::Index m,
                                       Eigen::Index n, std::mt19937_64& rng) {
  for (;;) {
    LQGameProblem pr{g,
                     smooth_vectors(g, p, rng),
                     smooth_kernel2(g, p, p, rng, 0.5),
                     smooth_kernel2(g, p, m, rng, 0.5),
                     smooth_kernel2(g, p, n, rng, 0.5),
                     psd_matrix(p, rng, 0.5),
                     symmetric_kernel1(g, p, rng, 0.3),
                     symmetric_kernel2(g, p, rng, 0.2),
                     symmetric_kernel1(g, m, rng, 0.3),
                     symmetric_kernel2(g, m, rng, 0.2),
                     symmetric_kernel1(g, n, rng, 0.3),
                     symmetric_kernel2(g, n, rng, 0.2)};
    for (std::size_t i = 0; i < g.size(); ++i) {
      pr.Q1.at(i) += 2.0 * Eigen::MatrixXd::Identity(m, m);
      pr.R1.at(i) = (pr.R1.at(i) - 3.0 * Eigen::MatrixXd::Identity(n, n)).eval();
    }
    if (certify(assemble_form(pr)).certified()) return pr;
  }
}

}  // namespace vgame::testing_support

#include "vgame/lqcgame.hpp"

namespace vgame::testing_support {

// The LQ game as an LQC problem: f0 = A y, F1 = B, F2 = C, g0 = ½yᵀP1y,
// G11 = Q1, G22 = R1. Valid when P0, P2, Q2, R2 vanish.
inline LQCProblem lq_as_lqc(const LQGameProblem& pr) {
  const TimeGrid g = pr.grid;
  auto at = [g](double t) { return g.index_of(t); };
  LQCProblem q(g);
  q.y0 = pr.y0;
  q.p = pr.p();
  q.m = pr.m();
  q.n = pr.n();
  q.f0 = [pr, at](double t, double s, const Vec& y) -> Vec { return pr.A.at(at(t), at(s)) * y; };
  q.F1 = [pr, at](double t, double s, const Vec&) -> Mat { return pr.B.at(at(t), at(s)); };
  q.F2 = [pr, at](double t, double s, const Vec&) -> Mat { return pr.C.at(at(t), at(s)); };
  q.g0 = [pr, at](double t, const Vec& y) { return 0.5 * y.dot(pr.P1.at(at(t)) * y); };
  q.g1 = [m = pr.m()](double, const Vec&) -> Vec { return Vec::Zero(m); };
  q.g2 = [n = pr.n()](double, const Vec&) -> Vec { return Vec::Zero(n); };
  q.G11 = [pr, at](double t, const Vec&) -> Mat { return pr.Q1.at(at(t)); };
  q.G12 = [m = pr.m(), n = pr.n()](double, const Vec&) -> Mat { return Mat::Zero(m, n); };
  q.G22 = [pr, at](double t, const Vec&) -> Mat { return pr.R1.at(at(t)); };
  q.cost_y = [pr, at](double t, const Vec& y, const Vec&, const Vec&) -> Vec {
    return pr.P1.at(at(t)) * y;
  };
  q.dynamics_y = [pr, at](double t, double s, const Vec&, const Vec&, const Vec&) -> Mat {
    return pr.A.at(at(t), at(s));
  };
  return q;
}

inline LQGameProblem random_overlap_lq(const TimeGrid& g, Eigen::Index p, Eigen::Index m,
                                       Eigen::Index n, std::mt19937_64& rng) {
  LQGameProblem pr = random_lq_problem(g, p, m, n, rng);
  const std::size_t N = g.size();
  pr.P0 = Mat::Zero(p, p);
  pr.P2 = Kernel2::constant(N, Mat::Zero(p, p));
  pr.Q2 = Kernel2::constant(N, Mat::Zero(m, m));
  pr.R2 = Kernel2::constant(N, Mat::Zero(n, n));
  return pr;
}

// Smooth nonlinear instance with analytic gradients:
//   f0 = e^{−(t−s)}(A y + c sin y),  F1 = B (1 + κ sin σ),  F2 = C,   σ = 1ᵀy
//   g0 = ½yᵀPy + γ Σ cos y,  g1 = b1 + E1 y,  g2 = b2 + E2 y
//   G11 = Q(1 + κ φ(σ)),  G12 = D,  G22 = −R(1 + κ φ(σ)),  φ = σ²/(1+σ²)
struct NonlinearData {
  Mat A, B, C, P, E1, E2, Q, D, R;
  Vec b1, b2;
  double c = 0.2, kappa = 0.2, gamma = 0.1;
};

inline LQCProblem nonlinear_lqc(const TimeGrid& g, Eigen::Index p, Eigen::Index m,
                                Eigen::Index n, std::mt19937_64& rng,
                                bool analytic_gradients = true) {
  NonlinearData d;
  d.A = random_matrix(p, p, rng, 0.3);
  d.B = random_matrix(p, m, rng, 0.4);
  d.C = random_matrix(p, n, rng, 0.4);
  d.P = psd_matrix(p, rng, 0.5);
  d.E1 = random_matrix(m, p, rng, 0.2);
  d.E2 = random_matrix(n, p, rng, 0.2);
  d.Q = psd_matrix(m, rng, 0.3) + 2 * Mat::Identity(m, m);
  d.R = psd_matrix(n, rng, 0.3) + 3 * Mat::Identity(n, n);
  d.D = random_matrix(m, n, rng, 0.2);
  d.b1 = random_matrix(m, 1, rng, 0.5);
  d.b2 = random_matrix(n, 1, rng, 0.5);
  auto phi = [](double s) { return s * s / (1 + s * s); };
  auto dphi = [](double s) { return 2 * s / ((1 + s * s) * (1 + s * s)); };

  LQCProblem q(g);
  q.y0 = smooth_vectors(g, p, rng, 0.7);
  q.p = p;
  q.m = m;
  q.n = n;
  q.f0 = [d](double t, double s, const Vec& y) -> Vec {
    return std::exp(-(t - s)) * (d.A * y + d.c * y.array().sin().matrix());
  };
  q.F1 = [d](double, double, const Vec& y) -> Mat { return d.B * (1 + d.kappa * std::sin(y.sum())); };
  q.F2 = [d](double, double, const Vec&) -> Mat { return d.C; };
  q.g0 = [d](double, const Vec& y) { return 0.5 * y.dot(d.P * y) + d.gamma * y.array().cos().sum(); };
  q.g1 = [d](double, const Vec& y) -> Vec { return d.b1 + d.E1 * y; };
  q.g2 = [d](double, const Vec& y) -> Vec { return d.b2 + d.E2 * y; };
  q.G11 = [d, phi](double, const Vec& y) -> Mat { return d.Q * (1 + d.kappa * phi(y.sum())); };
  q.G12 = [d](double, const Vec&) -> Mat { return d.D; };
  q.G22 = [d, phi](double, const Vec& y) -> Mat { return -d.R * (1 + d.kappa * phi(y.sum())); };
  if (analytic_gradients) {
    q.cost_y = [d, dphi](double, const Vec& y, const Vec& u, const Vec& v) -> Vec {
      const Vec ones = Vec::Ones(y.size());
      return d.P * y - d.gamma * y.array().sin().matrix() + d.E1.transpose() * u +
             d.E2.transpose() * v +
             0.5 * d.kappa * dphi(y.sum()) * (u.dot(d.Q * u) - v.dot(d.R * v)) * ones;
    };
    q.dynamics_y = [d](double t, double s, const Vec& y, const Vec& u, const Vec&) -> Mat {
      Mat J = std::exp(-(t - s)) * (d.A + d.c * Mat(y.array().cos().matrix().asDiagonal()));
      J += d.kappa * std::cos(y.sum()) * (d.B * u) * Vec::Ones(y.size()).transpose();
      return J;
    };
  }
  return q;
}

}  // namespace vgame::testing_support
