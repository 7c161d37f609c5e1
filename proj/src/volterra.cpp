#include "vgame/volterra.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include <Eigen/LU>

namespace vgame {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kDimensionMismatch, what);
}

void check_square(const Kernel2& A, std::size_t nodes) {
  require(A.rows() == A.cols(), "A must be square");
  require(A.size() == nodes, "A must be tabulated on the grid");
}

void check_vectors(const NodeVectors& v, std::size_t nodes, Eigen::Index dim,
                   const char* name) {
  require(v.size() == nodes, std::string(name) + ": one vector per node");
  for (const auto& x : v) require(x.size() == dim, std::string(name) + ": wrong size");
}

Eigen::PartialPivLU<Eigen::MatrixXd> step_factor(const Eigen::MatrixXd& M,
                                                 std::size_t node) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  if (!(lu.rcond() > 1e-12)) {
    throw Error(ErrorCode::kSingularStep,
                "step matrix I - w A(t, t) singular at node " +
                    std::to_string(node) + "; refine the grid");
  }
  return lu;
}

// Factorizations of I − table(i, i) A_ii for every node.
std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> step_factors(
    const Kernel2& A, const Eigen::MatrixXd& table) {
  const std::size_t N = A.size();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(A.rows(), A.rows());
  std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> out;
  out.reserve(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out.push_back(step_factor(I - table(ii, ii) * A.at(i, i), i));
  }
  return out;
}

// Blocks X_ij of (I − Ω_A)⁻¹Ω_K, lower triangular in (i, j).
Kernel2 lower_resolve(const Kernel2& A, const Kernel2& K,
                      const Eigen::MatrixXd& table) {
  const std::size_t N = A.size();
  const auto steps = step_factors(A, table);
  Kernel2 X(N, A.rows(), K.cols());
  for (std::size_t j = 0; j < N; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    for (std::size_t i = j; i < N; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      Eigen::MatrixXd rhs = table(ii, jj) * K.at(i, j);
      for (std::size_t k = j; k < i; ++k) {
        const double w = table(ii, static_cast<Eigen::Index>(k));
        if (w != 0.0) rhs += w * (A.at(i, k) * X.at(k, j));
      }
      X.at(i, j) = steps[i].solve(rhs);
    }
  }
  return X;
}

// Divides weighted blocks by their weights; zero-weight entries take the
// continuum value K(t, t) = fallback(t, t).
Kernel2 unweight(const Kernel2& X, const Kernel2& fallback,
                 const Eigen::MatrixXd& table) {
  const std::size_t N = X.size();
  Kernel2 out(N, X.rows(), X.cols());
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double w = table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      out.at(i, j) = w != 0.0 ? Eigen::MatrixXd(X.at(i, j) / w) : fallback.at(i, j);
    }
  }
  return out;
}

Eigen::MatrixXd dense_from_blocks(const Kernel2& X) {
  const auto N = static_cast<Eigen::Index>(X.size());
  const Eigen::Index r = X.rows();
  const Eigen::Index c = X.cols();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N * r, N * c);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      D.block(i * r, j * c, r, c) =
          X.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  }
  return D;
}

// Index reversal i ↦ N−1−i turns tail integrals into forward ones.
Kernel2 reversed_transpose(const Kernel2& A) {
  const std::size_t N = A.size();
  Kernel2 out(N, A.cols(), A.rows());
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = 0; b < N; ++b) {
      out.at(a, b) = A.at(N - 1 - b, N - 1 - a).transpose();
    }
  }
  return out;
}

Eigen::MatrixXd reversed_table(const Eigen::MatrixXd& table) {
  return table.reverse();
}

NodeVectors reversed(const NodeVectors& v) { return NodeVectors(v.rbegin(), v.rend()); }

}  // namespace

const Eigen::MatrixXd& tail_weights(const TimeGrid& grid, TailWeights kind) {
  return kind == TailWeights::kAdjoint ? grid.adjoint_tail_table() : grid.tail_table();
}

Eigen::MatrixXd volterra_operator(const Kernel2& K, const Eigen::MatrixXd& table) {
  const auto N = static_cast<Eigen::Index>(K.size());
  require(table.rows() == N && table.cols() == N, "weight table size");
  const Eigen::Index r = K.rows();
  const Eigen::Index c = K.cols();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N * r, N * c);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) {
      const double w = table(i, j);
      if (w != 0.0) {
        D.block(i * r, j * c, r, c) =
            w * K.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      }
    }
  }
  return D;
}

Eigen::MatrixXd volterra_operator(const Kernel2& K, const TimeGrid& grid) {
  require(K.size() == grid.size(), "kernel must be tabulated on the grid");
  return volterra_operator(K, grid.forward_table());
}

NodeVectors solve_volterra(const NodeVectors& forcing, const Kernel2& A,
                           const Eigen::MatrixXd& table) {
  const std::size_t N = A.size();
  require(A.rows() == A.cols(), "A must be square");
  check_vectors(forcing, N, A.rows(), "forcing");
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(A.rows(), A.rows());
  NodeVectors y(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    Eigen::VectorXd rhs = forcing[i];
    for (std::size_t j = 0; j < i; ++j) {
      const double w = table(ii, static_cast<Eigen::Index>(j));
      if (w != 0.0) rhs += w * (A.at(i, j) * y[j]);
    }
    y[i] = step_factor(I - table(ii, ii) * A.at(i, i), i).solve(rhs);
  }
  return y;
}

NodeVectors solve_volterra_linear(const NodeVectors& y0, const Kernel2& A,
                                  const Kernel2& B, const Kernel2& C,
                                  const NodeVectors& u, const NodeVectors& v,
                                  const TimeGrid& grid) {
  const std::size_t N = grid.size();
  check_square(A, N);
  const Eigen::Index p = A.rows();
  require(B.size() == N && B.rows() == p, "B shape");
  require(C.size() == N && C.rows() == p, "C shape");
  check_vectors(y0, N, p, "y0");
  check_vectors(u, N, B.cols(), "u");
  check_vectors(v, N, C.cols(), "v");
  const auto& F = grid.forward_table();
  NodeVectors forcing = y0;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double w = F(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (w != 0.0) forcing[i] += w * (B.at(i, j) * u[j] + C.at(i, j) * v[j]);
    }
  }
  return solve_volterra(forcing, A, F);
}

Kernel2 resolvent(const Kernel2& A, const TimeGrid& grid, ResolventFlavor flavor) {
  const std::size_t N = grid.size();
  check_square(A, N);
  if (flavor == ResolventFlavor::kDiscrete) {
    const auto& F = grid.forward_table();
    return unweight(lower_resolve(A, A, F), A, F);
  }
  const Eigen::Index p = A.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(p, p);
  Kernel2 S(N, p, p);
  for (std::size_t i = 0; i < N; ++i) {
    S.at(i, i) = A.at(i, i);
    for (std::size_t j = i; j-- > 0;) {
      const auto seg = grid.segment_weights(j, i);
      Eigen::MatrixXd rhs = A.at(i, j);
      for (std::size_t k = j + 1; k <= i; ++k) rhs += seg[k - j] * (S.at(i, k) * A.at(k, j));
      // S_ij (I − w_j A_jj) = rhs, solved through the transpose.
      const auto lu = step_factor((I - seg[0] * A.at(j, j)).transpose(), j);
      S.at(i, j) = lu.solve(rhs.transpose()).transpose();
    }
  }
  return S;
}

double resolvent_identity_residual(const Kernel2& S, const Kernel2& A,
                                   const TimeGrid& grid) {
  const std::size_t N = grid.size();
  check_square(A, N);
  require(S.size() == N && S.rows() == A.rows() && S.cols() == A.cols(),
          "S shape");
  double worst = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const auto seg = grid.segment_weights(j, i);
      Eigen::MatrixXd r = S.at(i, j) - A.at(i, j);
      for (std::size_t k = j; k <= i; ++k) r -= seg[k - j] * (S.at(i, k) * A.at(k, j));
      worst = std::max(worst, r.cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

ResolventTransform transform(const NodeVectors& y0, const Kernel2& A,
                             const Kernel2& B, const Kernel2& C,
                             const TimeGrid& grid) {
  const std::size_t N = grid.size();
  check_square(A, N);
  const Eigen::Index p = A.rows();
  require(B.size() == N && B.rows() == p, "B shape");
  require(C.size() == N && C.rows() == p, "C shape");
  check_vectors(y0, N, p, "y0");
  const auto& F = grid.forward_table();
  const Kernel2 XA = lower_resolve(A, A, F);
  const Kernel2 XB = lower_resolve(A, B, F);
  const Kernel2 XC = lower_resolve(A, C, F);
  return ResolventTransform{grid,
                            solve_volterra(y0, A, F),
                            unweight(XB, B, F),
                            unweight(XC, C, F),
                            unweight(XA, A, F),
                            dense_from_blocks(XB),
                            dense_from_blocks(XC)};
}

NodeVectors apply(const ResolventTransform& tr, const NodeVectors& u,
                  const NodeVectors& v) {
  const std::size_t N = tr.grid.size();
  check_vectors(u, N, tr.B1.cols(), "u");
  check_vectors(v, N, tr.C1.cols(), "v");
  const auto& F = tr.grid.forward_table();
  NodeVectors y = tr.y1;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double w = F(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (w != 0.0) y[i] += w * (tr.B1.at(i, j) * u[j] + tr.C1.at(i, j) * v[j]);
    }
  }
  return y;
}

NodeVectors solve_backward(const NodeVectors& forcing, const Kernel2& A,
                           const TimeGrid& grid, TailWeights weights) {
  check_square(A, grid.size());
  return reversed(solve_volterra(reversed(forcing), reversed_transpose(A),
                                 reversed_table(tail_weights(grid, weights))));
}

Kernel2 backward_resolvent(const Kernel2& A, const TimeGrid& grid,
                           TailWeights weights) {
  const std::size_t N = grid.size();
  check_square(A, N);
  const Kernel2 At = reversed_transpose(A);
  const Eigen::MatrixXd T = reversed_table(tail_weights(grid, weights));
  // Resolvent of the reversed problem, mapped back to (s, t) indexing.
  return reversed_transpose(unweight(lower_resolve(At, At, T), At, T));
}

NodeVectors apply_backward_resolvent(const NodeVectors& forcing,
                                     const Kernel2& sigma, const TimeGrid& grid,
                                     TailWeights weights) {
  const std::size_t N = grid.size();
  check_square(sigma, N);
  check_vectors(forcing, N, sigma.rows(), "forcing");
  const auto& T = tail_weights(grid, weights);
  NodeVectors psi = forcing;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t k = i; k < N; ++k) {
      const double w = T(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      if (w != 0.0) psi[i] += w * (sigma.at(k, i).transpose() * forcing[k]);
    }
  }
  return psi;
}

}  // namespace vgame
