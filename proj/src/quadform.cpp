#include "vgame/quadform.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace vgame {

std::string_view to_string(DefinitenessMethod method) {
  switch (method) {
    case DefinitenessMethod::kSpectral: return "spectral";
    case DefinitenessMethod::kBlockM: return "block-M";
    case DefinitenessMethod::kMercerSample: return "mercer-sample";
  }
  return "spectral";
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kDimensionMismatch, what);
}

void require_vectors(const NodeVectors& v, std::size_t nodes, Eigen::Index dim,
                     const std::string& name) {
  require(v.size() == nodes, name + ": expected one vector per node");
  for (const auto& x : v) require(x.size() == dim, name + ": wrong vector size");
}

void validate(const BlockQuadraticForm& f) {
  const std::size_t N = f.grid.size();
  const Eigen::Index m = f.m();
  const Eigen::Index n = f.n();
  require(f.K11.size() == N && f.K11.cols() == m, "K11 shape");
  require(f.K22.size() == N && f.K22.cols() == n, "K22 shape");
  require(f.K12.size() == N && f.K12.rows() == m && f.K12.cols() == n,
          "K12 shape");
  require(f.L11.size() == N && f.L11.rows() == m && f.L11.cols() == m,
          "L11 shape");
  require(f.L22.size() == N && f.L22.rows() == n && f.L22.cols() == n,
          "L22 shape");
  require(f.L12.size() == N && f.L12.rows() == m && f.L12.cols() == n,
          "L12 shape");
  require_vectors(f.q1, N, m, "q1");
  require_vectors(f.q2, N, n, "q2");
}

void validate(const BlockQuadraticForm& f, const ControlPair& w) {
  validate(f);
  require_vectors(w.w1, f.grid.size(), f.m(), "w1");
  require_vectors(w.w2, f.grid.size(), f.n(), "w2");
}

double symmetry_defect(const Kernel1& K) {
  double d = 0.0;
  for (const auto& k : K.values()) d = std::max(d, (k - k.transpose()).cwiseAbs().maxCoeff());
  return d;
}

double symmetry_defect(const Kernel2& L) {
  double d = 0.0;
  const std::size_t N = L.size();
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = i; j < N; ++j) {
      d = std::max(d, (L.at(i, j) - L.at(j, i).transpose()).cwiseAbs().maxCoeff());
    }
  }
  return d;
}

double kernel_scale(const Kernel1& K, const Kernel2& L) {
  double s = 1.0;
  for (const auto& k : K.values()) s = std::max(s, k.cwiseAbs().maxCoeff());
  for (const auto& l : L.values()) s = std::max(s, l.cwiseAbs().maxCoeff());
  return s;
}

void require_symmetric(const Kernel1& K, const Kernel2& L) {
  require(K.rows() == K.cols() && L.rows() == L.cols() && K.rows() == L.rows(),
          "definiteness needs square kernels of equal size");
  require(K.size() == L.size(), "kernel node counts differ");
  const double tol = 1e-12 * kernel_scale(K, L);
  if (symmetry_defect(K) > tol || symmetry_defect(L) > tol) {
    throw Error(ErrorCode::kNotSymmetric,
                "kernels violate K = Kᵀ or L(x, y) = L(y, x)ᵀ");
  }
}

Eigen::VectorXd solve_dense(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                            const char* what) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    throw Error(ErrorCode::kSingularSystem,
                std::string(what) + " is numerically singular (rcond " +
                    std::to_string(rcond) + ")");
  }
  return lu.solve(b);
}

// Cross-coupling contribution K12 w2 + ∫ L12 w2 at every node.
NodeVectors coupling_from_w2(const BlockQuadraticForm& f, const NodeVectors& w2) {
  const std::size_t N = f.grid.size();
  NodeVectors out = zero_vectors(N, f.m());
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = f.K12.at(i) * w2[i];
    for (std::size_t j = 0; j < N; ++j) {
      out[i] += f.grid.weight(j) * (f.L12.at(i, j) * w2[j]);
    }
  }
  return out;
}

// K21 w1 + ∫ L21 w1 with K21 = K12ᵀ and L21(x, y) = L12(y, x)ᵀ.
NodeVectors coupling_from_w1(const BlockQuadraticForm& f, const NodeVectors& w1) {
  const std::size_t N = f.grid.size();
  NodeVectors out = zero_vectors(N, f.n());
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = f.K12.at(i).transpose() * w1[i];
    for (std::size_t j = 0; j < N; ++j) {
      out[i] += f.grid.weight(j) * (f.L12.at(j, i).transpose() * w1[j]);
    }
  }
  return out;
}

}  // namespace

double double_integral_form(const Kernel2& L, const NodeVectors& w,
                            const TimeGrid& grid) {
  const std::size_t N = grid.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      row += grid.weight(j) * w[i].dot(L.at(i, j) * w[j]);
    }
    sum += grid.weight(i) * row;
  }
  return sum;
}

double evaluate(const BlockQuadraticForm& f, const ControlPair& w) {
  validate(f, w);
  const std::size_t N = f.grid.size();
  double single = 0.0;
  double linear = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const auto& a = w.w1[i];
    const auto& b = w.w2[i];
    const double quad = a.dot(f.K11.at(i) * a) + 2.0 * a.dot(f.K12.at(i) * b) +
                        b.dot(f.K22.at(i) * b);
    single += f.grid.weight(i) * quad;
    linear += f.grid.weight(i) * (f.q1[i].dot(a) + f.q2[i].dot(b));
  }
  double dbl = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      row += f.grid.weight(j) *
             (w.w1[i].dot(f.L11.at(i, j) * w.w1[j]) +
              2.0 * w.w1[i].dot(f.L12.at(i, j) * w.w2[j]) +
              w.w2[i].dot(f.L22.at(i, j) * w.w2[j]));
    }
    dbl += f.grid.weight(i) * row;
  }
  return 0.5 * single + 0.5 * dbl + linear;
}

double evaluate(const RawBlockForm& f, const ControlPair& w) {
  const std::size_t N = f.grid.size();
  double single = 0.0;
  double linear = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const auto& a = w.w1[i];
    const auto& b = w.w2[i];
    const double quad = a.dot(f.K11.at(i) * a) + a.dot(f.K12.at(i) * b) +
                        b.dot(f.K21.at(i) * a) + b.dot(f.K22.at(i) * b);
    single += f.grid.weight(i) * quad;
    linear += f.grid.weight(i) * (f.q1[i].dot(a) + f.q2[i].dot(b));
  }
  double dbl = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      row += f.grid.weight(j) *
             (w.w1[i].dot(f.L11.at(i, j) * w.w1[j]) +
              w.w1[i].dot(f.L12.at(i, j) * w.w2[j]) +
              w.w2[i].dot(f.L21.at(i, j) * w.w1[j]) +
              w.w2[i].dot(f.L22.at(i, j) * w.w2[j]));
    }
    dbl += f.grid.weight(i) * row;
  }
  return 0.5 * single + 0.5 * dbl + linear;
}

BlockQuadraticForm symmetrize(const RawBlockForm& r) {
  const std::size_t N = r.grid.size();
  require(r.K11.size() == N && r.K22.size() == N && r.K12.size() == N &&
              r.K21.size() == N,
          "raw K blocks must cover the grid");
  require(r.K12.rows() == r.K21.cols() && r.K12.cols() == r.K21.rows(),
          "K12 and K21 shapes are not transposes");
  require(r.L12.rows() == r.L21.cols() && r.L12.cols() == r.L21.rows(),
          "L12 and L21 shapes are not transposes");
  BlockQuadraticForm f{r.grid,
                       Kernel1(N, r.K11.rows(), r.K11.cols()),
                       Kernel1(N, r.K22.rows(), r.K22.cols()),
                       Kernel1(N, r.K12.rows(), r.K12.cols()),
                       Kernel2(N, r.L11.rows(), r.L11.cols()),
                       Kernel2(N, r.L22.rows(), r.L22.cols()),
                       Kernel2(N, r.L12.rows(), r.L12.cols()),
                       r.q1,
                       r.q2};
  for (std::size_t i = 0; i < N; ++i) {
    f.K11.at(i) = 0.5 * (r.K11.at(i) + r.K11.at(i).transpose());
    f.K22.at(i) = 0.5 * (r.K22.at(i) + r.K22.at(i).transpose());
    f.K12.at(i) = 0.5 * (r.K12.at(i) + r.K21.at(i).transpose());
    for (std::size_t j = 0; j < N; ++j) {
      f.L11.at(i, j) = 0.5 * (r.L11.at(i, j) + r.L11.at(j, i).transpose());
      f.L22.at(i, j) = 0.5 * (r.L22.at(i, j) + r.L22.at(j, i).transpose());
      f.L12.at(i, j) = 0.5 * (r.L12.at(i, j) + r.L21.at(j, i).transpose());
    }
  }
  return f;
}

BlockQuadraticForm symmetrize(const BlockQuadraticForm& form) {
  validate(form);
  RawBlockForm raw{form.grid,
                   form.K11,
                   form.K22,
                   form.K12,
                   Kernel1(form.grid.size(), form.n(), form.m()),
                   form.L11,
                   form.L22,
                   form.L12,
                   form.L12.adjoint(),
                   form.q1,
                   form.q2};
  for (std::size_t i = 0; i < form.grid.size(); ++i) {
    raw.K21.at(i) = form.K12.at(i).transpose();
  }
  return symmetrize(raw);
}

std::pair<NodeVectors, NodeVectors> stationarity_residual(
    const BlockQuadraticForm& f, const ControlPair& w) {
  validate(f, w);
  const std::size_t N = f.grid.size();
  NodeVectors r1 = coupling_from_w2(f, w.w2);
  NodeVectors r2 = coupling_from_w1(f, w.w1);
  for (std::size_t i = 0; i < N; ++i) {
    r1[i] += f.K11.at(i) * w.w1[i] + f.q1[i];
    r2[i] += f.K22.at(i) * w.w2[i] + f.q2[i];
    for (std::size_t j = 0; j < N; ++j) {
      r1[i] += f.grid.weight(j) * (f.L11.at(i, j) * w.w1[j]);
      r2[i] += f.grid.weight(j) * (f.L22.at(i, j) * w.w2[j]);
    }
  }
  return {std::move(r1), std::move(r2)};
}

Eigen::MatrixXd nystrom_matrix(const Kernel1& K, const Kernel2& L,
                               const TimeGrid& grid) {
  const std::size_t N = grid.size();
  const Eigen::Index d = K.rows();
  require(K.cols() == d && L.rows() == d && L.cols() == d &&
              K.size() == N && L.size() == N,
          "nystrom_matrix: kernel shapes");
  const auto n = static_cast<Eigen::Index>(N);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n * d, n * d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      A.block(i * d, j * d, d, d) = grid.weight(j) * L.at(i, j);
    }
    A.block(i * d, i * d, d, d) += K.at(i);
  }
  return A;
}

Eigen::MatrixXd symmetric_operator(const Kernel1& K, const Kernel2& L,
                                   const TimeGrid& grid) {
  const std::size_t N = grid.size();
  const Eigen::Index d = K.rows();
  require(K.cols() == d && L.rows() == d && L.cols() == d &&
              K.size() == N && L.size() == N,
          "symmetric_operator: kernel shapes");
  const auto n = static_cast<Eigen::Index>(N);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n * d, n * d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double wi = std::sqrt(grid.weight(i));
    for (Eigen::Index j = 0; j < n; ++j) {
      S.block(i * d, j * d, d, d) = wi * std::sqrt(grid.weight(j)) * L.at(i, j);
    }
    S.block(i * d, i * d, d, d) += K.at(i);
  }
  // Round-off can leave the assembled matrix asymmetric in the last bit.
  return 0.5 * (S + S.transpose());
}

DefinitenessReport check_joint_definiteness(const Kernel1& K, const Kernel2& L,
                                            const TimeGrid& grid, Sign sign,
                                            double tol) {
  require_symmetric(K, L);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      symmetric_operator(K, L, grid), Eigen::EigenvaluesOnly);
  DefinitenessReport report;
  report.method = DefinitenessMethod::kSpectral;
  if (sign == Sign::kPositive) {
    report.min_eig_11 = eig.eigenvalues().minCoeff();
    report.jointly_pd_11 = report.min_eig_11 > tol;
  } else {
    report.max_eig_22 = eig.eigenvalues().maxCoeff();
    report.jointly_nd_22 = report.max_eig_22 < -tol;
  }
  return report;
}

DefinitenessReport certify(const BlockQuadraticForm& form, double tol) {
  validate(form);
  const auto pos = check_joint_definiteness(form.K11, form.L11, form.grid,
                                            Sign::kPositive, tol);
  const auto neg = check_joint_definiteness(form.K22, form.L22, form.grid,
                                            Sign::kNegative, tol);
  DefinitenessReport report;
  report.method = DefinitenessMethod::kSpectral;
  report.jointly_pd_11 = pos.jointly_pd_11;
  report.min_eig_11 = pos.min_eig_11;
  report.jointly_nd_22 = neg.jointly_nd_22;
  report.max_eig_22 = neg.max_eig_22;
  return report;
}

InvertibilityReport check_pointwise_invertibility(const BlockQuadraticForm& f,
                                                  double condition_bound) {
  validate(f);
  InvertibilityReport report;
  const Eigen::Index m = f.m();
  const Eigen::Index n = f.n();
  auto condition = [](const Eigen::MatrixXd& A) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
  };
  for (std::size_t i = 0; i < f.grid.size(); ++i) {
    Eigen::MatrixXd K(m + n, m + n);
    K.topLeftCorner(m, m) = f.K11.at(i);
    K.topRightCorner(m, n) = f.K12.at(i);
    K.bottomLeftCorner(n, m) = f.K12.at(i).transpose();
    K.bottomRightCorner(n, n) = f.K22.at(i);
    for (double c : {condition(f.K11.at(i)), condition(f.K22.at(i)), condition(K)}) {
      report.worst_condition = std::max(report.worst_condition, c);
    }
  }
  report.ok = report.worst_condition <= condition_bound;
  return report;
}

NodeVectors best_response_min(const BlockQuadraticForm& f, const NodeVectors& w2,
                              const SaddleOptions& options) {
  validate(f);
  require_vectors(w2, f.grid.size(), f.n(), "w2");
  if (!options.override_certification) {
    const auto report = check_joint_definiteness(f.K11, f.L11, f.grid,
                                                 Sign::kPositive,
                                                 options.definiteness_tol);
    if (!report.jointly_pd_11) {
      throw Error(ErrorCode::kNotCertified,
                  "(K11, L11) is not jointly positive definite (min eig " +
                      std::to_string(report.min_eig_11) + ")");
    }
  }
  const NodeVectors coupling = coupling_from_w2(f, w2);
  Eigen::VectorXd rhs = -stack(coupling);
  rhs -= stack(f.q1);
  const Eigen::VectorXd x =
      solve_dense(nystrom_matrix(f.K11, f.L11, f.grid), rhs, "minimizer system");
  return unstack(x, f.grid.size(), f.m());
}

NodeVectors best_response_max(const BlockQuadraticForm& f, const NodeVectors& w1,
                              const SaddleOptions& options) {
  validate(f);
  require_vectors(w1, f.grid.size(), f.m(), "w1");
  if (!options.override_certification) {
    const auto report = check_joint_definiteness(f.K22, f.L22, f.grid,
                                                 Sign::kNegative,
                                                 options.definiteness_tol);
    if (!report.jointly_nd_22) {
      throw Error(ErrorCode::kNotCertified,
                  "(K22, L22) is not jointly negative definite (max eig " +
                      std::to_string(report.max_eig_22) + ")");
    }
  }
  const NodeVectors coupling = coupling_from_w1(f, w1);
  Eigen::VectorXd rhs = -stack(coupling);
  rhs -= stack(f.q2);
  const Eigen::VectorXd x =
      solve_dense(nystrom_matrix(f.K22, f.L22, f.grid), rhs, "maximizer system");
  return unstack(x, f.grid.size(), f.n());
}

ControlPair saddle_point(const BlockQuadraticForm& f, const SaddleOptions& options) {
  validate(f);
  if (!options.override_certification) {
    const auto report = certify(f, options.definiteness_tol);
    if (!report.certified()) {
      throw Error(ErrorCode::kNotCertified,
                  "form not certified: min eig (K11, L11) = " +
                      std::to_string(report.min_eig_11) +
                      ", max eig (K22, L22) = " +
                      std::to_string(report.max_eig_22));
    }
  }
  const auto N = static_cast<Eigen::Index>(f.grid.size());
  const Eigen::Index m = f.m();
  const Eigen::Index n = f.n();
  const Eigen::Index off = N * m;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N * (m + n), N * (m + n));
  A.topLeftCorner(off, off) = nystrom_matrix(f.K11, f.L11, f.grid);
  A.bottomRightCorner(N * n, N * n) = nystrom_matrix(f.K22, f.L22, f.grid);
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto si = static_cast<std::size_t>(i);
    for (Eigen::Index j = 0; j < N; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      const double wj = f.grid.weight(sj);
      A.block(i * m, off + j * n, m, n) = wj * f.L12.at(si, sj);
      A.block(off + i * n, j * m, n, m) = wj * f.L12.at(sj, si).transpose();
    }
    A.block(i * m, off + i * n, m, n) += f.K12.at(si);
    A.block(off + i * n, i * m, n, m) += f.K12.at(si).transpose();
  }
  Eigen::VectorXd rhs(N * (m + n));
  rhs.head(off) = -stack(f.q1);
  rhs.tail(N * n) = -stack(f.q2);
  const Eigen::VectorXd x = solve_dense(A, rhs, "saddle system");

  ControlPair w{unstack(x.head(off), f.grid.size(), m),
                unstack(x.tail(N * n), f.grid.size(), n)};
  const auto [r1, r2] = stationarity_residual(f, w);
  const double scale = std::max({1.0, max_norm(f.q1), max_norm(f.q2)});
  const double residual = std::max(max_norm(r1), max_norm(r2));
  if (!(residual < options.residual_tol * scale)) {
    throw Error(ErrorCode::kSingularSystem,
                "saddle residual " + std::to_string(residual) +
                    " exceeds tolerance");
  }
  return w;
}

double block_M_min_eigenvalue(const Kernel1& K, const Kernel2& L,
                              const TimeGrid& grid) {
  require_symmetric(K, L);
  const std::size_t N = grid.size();
  const Eigen::Index d = K.rows();
  const double inv_measure = 1.0 / grid.length();
  double lo = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd M(2 * d, 2 * d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      M.topLeftCorner(d, d) = inv_measure * K.at(i);
      M.bottomRightCorner(d, d) = inv_measure * K.at(j);
      M.topRightCorner(d, d) = L.at(i, j);
      M.bottomLeftCorner(d, d) = L.at(i, j).transpose();
      eig.compute(M, Eigen::EigenvaluesOnly);
      lo = std::min(lo, eig.eigenvalues()(0));
    }
  }
  return lo;
}

bool block_M_condition(const Kernel1& K, const Kernel2& L, const TimeGrid& grid,
                       double tol) {
  return block_M_min_eigenvalue(K, L, grid) > tol;
}

bool mercer_sample_check(const Kernel2& L, const TimeGrid& grid, int trials,
                         std::uint64_t seed, double tol) {
  require(L.rows() == L.cols() && L.size() == grid.size(),
          "mercer_sample_check: L must be square on the grid");
  const std::size_t N = grid.size();
  const Eigen::Index d = L.rows();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> count_dist(1, N);
  std::uniform_int_distribution<std::size_t> node_dist(0, N - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  for (int trial = 0; trial < trials; ++trial) {
    const auto count = static_cast<Eigen::Index>(count_dist(rng));
    std::vector<std::size_t> points(static_cast<std::size_t>(count));
    for (auto& p : points) p = node_dist(rng);
    // The worst vectors a for this collection are the eigenvectors of the
    // sampled block matrix, so its smallest eigenvalue decides the trial.
    Eigen::MatrixXd G(count * d, count * d);
    for (Eigen::Index k = 0; k < count; ++k) {
      for (Eigen::Index l = 0; l < count; ++l) {
        G.block(k * d, l * d, d, d) =
            L.at(points[static_cast<std::size_t>(k)], points[static_cast<std::size_t>(l)]);
      }
    }
    eig.compute(0.5 * (G + G.transpose()), Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    if (eig.eigenvalues()(0) < -tol * scale) return false;
  }
  return true;
}

namespace {

double inner(const NodeVectors& a, const NodeVectors& b, const TimeGrid& grid) {
  double s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) s += grid.weight(i) * a[i].dot(b[i]);
  return s;
}

}  // namespace

SpectralBasis legendre_basis(const TimeGrid& grid, Eigen::Index dim, int degrees) {
  require(dim >= 1 && degrees >= 1, "legendre_basis: dim and degrees positive");
  const std::size_t N = grid.size();
  std::vector<NodeVectors> fns;
  for (int deg = 0; deg < degrees; ++deg) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      NodeVectors f = zero_vectors(N, dim);
      for (std::size_t i = 0; i < N; ++i) {
        const double x = 2.0 * (grid.node(i) - grid.t0()) / grid.length() - 1.0;
        f[i](c) = std::legendre(static_cast<unsigned>(deg), x);
      }
      fns.push_back(std::move(f));
    }
  }
  // Two passes of modified Gram-Schmidt under the quadrature inner product.
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t k = 0; k < fns.size(); ++k) {
      for (std::size_t l = 0; l < k; ++l) {
        const double c = inner(fns[k], fns[l], grid);
        for (std::size_t i = 0; i < N; ++i) fns[k][i] -= c * fns[l][i];
      }
      const double norm = std::sqrt(inner(fns[k], fns[k], grid));
      if (!(norm > 1e-10)) {
        throw Error(ErrorCode::kBasisNotOrthonormal,
                    "grid too coarse for the requested polynomial degree");
      }
      for (auto& v : fns[k]) v /= norm;
    }
  }
  return SpectralBasis{grid, std::move(fns)};
}

Kernel2 synthesize_kernel(const SpectralBasis& basis, const Eigen::MatrixXd& lambda) {
  const std::size_t K = basis.functions.size();
  require(lambda.rows() == static_cast<Eigen::Index>(K) && lambda.cols() == lambda.rows(),
          "lambda must be square with one row per basis function");
  const std::size_t N = basis.grid.size();
  const Eigen::Index d = basis.functions.front().front().size();
  Kernel2 L(N, d, d);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
      for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t l = 0; l < K; ++l) {
          const double c = lambda(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
          if (c != 0.0) acc += c * basis.functions[k][i] * basis.functions[l][j].transpose();
        }
      }
      L.at(i, j) = acc;
    }
  }
  return L;
}

SpectralCheck spectral_definiteness(const Kernel2& L, const SpectralBasis& basis,
                                    double tol) {
  const auto& grid = basis.grid;
  const std::size_t K = basis.functions.size();
  require(K > 0, "empty basis");
  require(L.size() == grid.size() && L.rows() == L.cols() &&
              L.rows() == basis.functions.front().front().size(),
          "spectral_definiteness: kernel and basis shapes");
  double defect = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t l = 0; l < K; ++l) {
      const double g = inner(basis.functions[k], basis.functions[l], grid);
      defect = std::max(defect, std::abs(g - (k == l ? 1.0 : 0.0)));
    }
  }
  if (defect > 1e-8) {
    throw Error(ErrorCode::kBasisNotOrthonormal,
                "Gram matrix deviates from identity by " + std::to_string(defect));
  }
  const std::size_t N = grid.size();
  // (∫ L ω_ℓ)(x_i) for each ℓ, then project on ω_k.
  SpectralCheck out;
  out.lambda = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  for (std::size_t l = 0; l < K; ++l) {
    NodeVectors Lw = zero_vectors(N, L.rows());
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < N; ++j) {
        Lw[i] += grid.weight(j) * (L.at(i, j) * basis.functions[l][j]);
      }
    }
    for (std::size_t k = 0; k < K; ++k) {
      out.lambda(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) =
          inner(basis.functions[k], Lw, grid);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      0.5 * (out.lambda + out.lambda.transpose()), Eigen::EigenvaluesOnly);
  out.min_eigenvalue = eig.eigenvalues().minCoeff();
  out.nonnegative = out.min_eigenvalue >= -tol;
  return out;
}

NodeVectors expand(const SpectralBasis& basis, const Eigen::VectorXd& c) {
  require(c.size() == static_cast<Eigen::Index>(basis.functions.size()),
          "coefficient count must match basis size");
  const std::size_t N = basis.grid.size();
  NodeVectors w = zero_vectors(N, basis.functions.front().front().size());
  for (std::size_t k = 0; k < basis.functions.size(); ++k) {
    for (std::size_t i = 0; i < N; ++i) {
      w[i] += c(static_cast<Eigen::Index>(k)) * basis.functions[k][i];
    }
  }
  return w;
}

}  // namespace vgame
