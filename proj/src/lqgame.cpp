#include "vgame/lqgame.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "vgame/volterra.hpp"

namespace vgame {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kDimensionMismatch, what);
}

void require_kernel(const Kernel1& K, std::size_t N, Eigen::Index r, Eigen::Index c,
                    const char* name) {
  require(K.size() == N && K.rows() == r && K.cols() == c,
          std::string(name) + " has the wrong shape");
}

void require_kernel(const Kernel2& K, std::size_t N, Eigen::Index r, Eigen::Index c,
                    const char* name) {
  require(K.size() == N && K.rows() == r && K.cols() == c,
          std::string(name) + " has the wrong shape");
}

void require_vectors(const NodeVectors& v, std::size_t N, Eigen::Index dim,
                     const char* name) {
  require(v.size() == N, std::string(name) + ": one vector per node");
  for (const auto& x : v) require(x.size() == dim, std::string(name) + ": wrong size");
}

// Dense matrix of the quadratic ½xᵀMx = ½Σ w_i x_iᵀK_i x_i + ½ΣΣ w_i w_j x_iᵀL_ij x_j.
Eigen::MatrixXd weighted_quadratic(const Kernel1& K, const Kernel2& L,
                                   const TimeGrid& grid) {
  const auto N = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index d = K.rows();
  Eigen::MatrixXd M(N * d, N * d);
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto si = static_cast<std::size_t>(i);
    for (Eigen::Index j = 0; j < N; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      M.block(i * d, j * d, d, d) = grid.weight(si) * grid.weight(sj) * L.at(si, sj);
    }
    M.block(i * d, i * d, d, d) += grid.weight(si) * K.at(si);
  }
  return M;
}

Eigen::MatrixXd state_weight(const LQGameProblem& pr) {
  const Eigen::Index p = pr.p();
  Eigen::MatrixXd P = weighted_quadratic(pr.P1, pr.P2, pr.grid);
  P.bottomRightCorner(p, p) += pr.P0;
  return P;
}

// Divides block (i, j) by w_i w_j.
Kernel2 unweighted_blocks(const Eigen::MatrixXd& M, const TimeGrid& grid,
                          Eigen::Index r, Eigen::Index c) {
  const std::size_t N = grid.size();
  Kernel2 out(N, r, c);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      out.at(i, j) = M.block(static_cast<Eigen::Index>(i) * r,
                             static_cast<Eigen::Index>(j) * c, r, c) /
                     (grid.weight(i) * grid.weight(j));
    }
  }
  return out;
}

double asymmetry(const Kernel2& L) {
  double d = 0.0;
  for (std::size_t i = 0; i < L.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j)
      d = std::max(d, (L.at(i, j) - L.at(j, i).transpose()).cwiseAbs().maxCoeff());
  return d;
}

double asymmetry(const Kernel1& K) {
  double d = 0.0;
  for (const auto& k : K.values()) d = std::max(d, (k - k.transpose()).cwiseAbs().maxCoeff());
  return d;
}

double magnitude(const Kernel2& L) {
  double s = 1.0;
  for (const auto& l : L.values()) s = std::max(s, l.cwiseAbs().maxCoeff());
  return s;
}

double smallest_eigenvalue(const Eigen::MatrixXd& S) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S, Eigen::EigenvaluesOnly)
      .eigenvalues()(0);
}

void require_symmetric_pair(const Kernel1& K, const Kernel2& L) {
  require(K.rows() == K.cols() && L.rows() == L.cols() && K.rows() == L.rows() &&
              K.size() == L.size(),
          "kernels must be square, of equal size, on one grid");
  const double tol = 1e-12 * magnitude(L);
  if (asymmetry(K) > tol || asymmetry(L) > tol) {
    throw Error(ErrorCode::kNotSymmetric, "kernel pair is not symmetric");
  }
}

}  // namespace

void LQGameProblem::validate() const {
  const std::size_t N = grid.size();
  const Eigen::Index p_ = A.rows();
  require_kernel(A, N, p_, p_, "A");
  require(B.size() == N && B.rows() == p_, "B has the wrong shape");
  require(C.size() == N && C.rows() == p_, "C has the wrong shape");
  require_vectors(y0, N, p_, "y0");
  require(P0.rows() == p_ && P0.cols() == p_, "P0 has the wrong shape");
  require_kernel(P1, N, p_, p_, "P1");
  require_kernel(P2, N, p_, p_, "P2");
  require_kernel(Q1, N, m(), m(), "Q1");
  require_kernel(Q2, N, m(), m(), "Q2");
  require_kernel(R1, N, n(), n(), "R1");
  require_kernel(R2, N, n(), n(), "R2");
}

NodeVectors solve_state(const LQGameProblem& pr, const NodeVectors& u,
                        const NodeVectors& v) {
  pr.validate();
  return solve_volterra_linear(pr.y0, pr.A, pr.B, pr.C, u, v, pr.grid);
}

double evaluate_J(const LQGameProblem& pr, const NodeVectors& u, const NodeVectors& v) {
  const NodeVectors y = solve_state(pr, u, v);
  const auto& g = pr.grid;
  const std::size_t N = g.size();
  double single = 0.0;
  double dbl = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    single += g.weight(i) * (y[i].dot(pr.P1.at(i) * y[i]) + u[i].dot(pr.Q1.at(i) * u[i]) +
                             v[i].dot(pr.R1.at(i) * v[i]));
    double row = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      row += g.weight(j) * (y[i].dot(pr.P2.at(i, j) * y[j]) + u[i].dot(pr.Q2.at(i, j) * u[j]) +
                            v[i].dot(pr.R2.at(i, j) * v[j]));
    }
    dbl += g.weight(i) * row;
  }
  return 0.5 * y.back().dot(pr.P0 * y.back()) + 0.5 * single + 0.5 * dbl;
}

BlockQuadraticForm assemble_form(const LQGameProblem& pr) {
  pr.validate();
  const auto& g = pr.grid;
  const std::size_t N = g.size();
  const Eigen::Index m = pr.m();
  const Eigen::Index n = pr.n();
  const ResolventTransform tr = transform(pr.y0, pr.A, pr.B, pr.C, g);
  const Eigen::MatrixXd P = state_weight(pr);
  const Eigen::MatrixXd PB = P * tr.state_from_u;
  const Eigen::MatrixXd PC = P * tr.state_from_v;
  const Eigen::VectorXd Py1 = P * stack(tr.y1);

  BlockQuadraticForm form{g,
                          pr.Q1,
                          pr.R1,
                          Kernel1::constant(N, Eigen::MatrixXd::Zero(m, n)),
                          unweighted_blocks(tr.state_from_u.transpose() * PB, g, m, m),
                          unweighted_blocks(tr.state_from_v.transpose() * PC, g, n, n),
                          unweighted_blocks(tr.state_from_u.transpose() * PC, g, m, n),
                          unstack(tr.state_from_u.transpose() * Py1, N, m),
                          unstack(tr.state_from_v.transpose() * Py1, N, n)};
  for (std::size_t i = 0; i < N; ++i) {
    form.q1[i] /= g.weight(i);
    form.q2[i] /= g.weight(i);
    for (std::size_t j = 0; j < N; ++j) {
      form.L11.at(i, j) += pr.Q2.at(i, j);
      form.L22.at(i, j) += pr.R2.at(i, j);
    }
  }

  const double d11 = asymmetry(form.L11) / magnitude(form.L11);
  const double d22 = asymmetry(form.L22) / magnitude(form.L22);
  const double k = std::max(asymmetry(form.K11), asymmetry(form.K22));
  if (std::max({d11, d22, k}) > 1e-12) {
    throw Error(ErrorCode::kAsymmetryDetected,
                "assembled blocks are not symmetric (defect " +
                    std::to_string(std::max({d11, d22, k})) +
                    "); check P0, P1, P2, Q1, Q2, R1, R2 symmetry");
  }
  return form;
}

DefinitenessConstants coercivity_constants(const Kernel1& kernel1,
                                           const Kernel2& kernel2,
                                           const TimeGrid& grid) {
  require_symmetric_pair(kernel1, kernel2);
  require(kernel1.size() == grid.size(), "kernels must be tabulated on the grid");
  const Eigen::Index d = kernel1.rows();
  const std::size_t N = grid.size();
  const auto zero1 = Kernel1::constant(N, Eigen::MatrixXd::Zero(d, d));
  const auto zero2 = Kernel2::constant(N, Eigen::MatrixXd::Zero(d, d));
  DefinitenessConstants c;
  c.raw_single = smallest_eigenvalue(symmetric_operator(kernel1, zero2, grid));
  c.raw_double = smallest_eigenvalue(symmetric_operator(zero1, kernel2, grid));
  c.raw_joint = smallest_eigenvalue(symmetric_operator(kernel1, kernel2, grid));
  c.single = std::max(0.0, c.raw_single);
  c.dbl = std::max(0.0, c.raw_double);
  c.joint = std::max(0.0, c.raw_joint);
  return c;
}

DefinitenessConstants accretivity_constants(const Kernel1& kernel1,
                                            const Kernel2& kernel2,
                                            const TimeGrid& grid) {
  Kernel1 neg1 = kernel1;
  for (std::size_t i = 0; i < neg1.size(); ++i) neg1.at(i) = -kernel1.at(i);
  Kernel2 neg2 = kernel2;
  for (std::size_t i = 0; i < neg2.size(); ++i)
    for (std::size_t j = 0; j < neg2.size(); ++j) neg2.at(i, j) = -kernel2.at(i, j);
  return coercivity_constants(neg1, neg2, grid);
}

LQSolution solve_lq_game(const LQGameProblem& pr, const SaddleOptions& options) {
  const BlockQuadraticForm form = assemble_form(pr);
  LQSolution sol;
  sol.report = certify(form, options.definiteness_tol);
  const ControlPair w = saddle_point(form, options);
  sol.u_star = w.w1;
  sol.v_star = w.w2;
  sol.y_star = solve_state(pr, sol.u_star, sol.v_star);
  sol.value = evaluate_J(pr, sol.u_star, sol.v_star);
  return sol;
}

}  // namespace vgame
