#include "vgame/lqcgame.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include <Eigen/LU>

namespace vgame {

namespace {

Eigen::PartialPivLU<Mat> factor(const Mat& M, ErrorCode code, const char* name,
                                double t) {
  Eigen::PartialPivLU<Mat> lu(M);
  if (!(lu.rcond() > 1e-13)) {
    throw Error(code, std::string(name) + " is singular at t = " + std::to_string(t));
  }
  return lu;
}

double fd_step(const Vec& y) { return 1e-6 * std::max(1.0, y.cwiseAbs().maxCoeff()); }

// Σ_k w_ik K(t_k, t_i, y)ᵀ ψ_k for K = F1 or F2.
Vec tail_integral(const LQCProblem& pr, const LQCProblem::KernelMatrix& K,
                  Eigen::Index cols, std::size_t i, const Vec& y, const NodeVectors& psi,
                  TailWeights weights) {
  const auto& T = tail_weights(pr.grid, weights);
  const auto ii = static_cast<Eigen::Index>(i);
  Vec out = Vec::Zero(cols);
  for (std::size_t k = i; k < pr.grid.size(); ++k) {
    const double w = T(ii, static_cast<Eigen::Index>(k));
    if (w != 0.0) out += w * (K(pr.grid.node(k), pr.grid.node(i), y).transpose() * psi[k]);
  }
  return out;
}

Vec tail_f0(const LQCProblem& pr, std::size_t i, const Vec& y, const NodeVectors& psi,
            TailWeights weights) {
  const auto& T = tail_weights(pr.grid, weights);
  const auto ii = static_cast<Eigen::Index>(i);
  double out = 0.0;
  for (std::size_t k = i; k < pr.grid.size(); ++k) {
    const double w = T(ii, static_cast<Eigen::Index>(k));
    if (w != 0.0) out += w * psi[k].dot(pr.f0(pr.grid.node(k), pr.grid.node(i), y));
  }
  return Vec::Constant(1, out);
}

// Pointwise data of the Hamiltonian at node i: the matrices and the linear
// terms g1ᵀ + I1, g2ᵀ + I2 that the control laws consume.
struct LocalData {
  Mat G11, G12, G22;
  Vec a1;  // g1ᵀ + ∫F1ᵀψᵀ
  Vec a2;  // g2ᵀ + ∫F2ᵀψᵀ
};

LocalData local_data(const LQCProblem& pr, std::size_t i, const Vec& y,
                     const NodeVectors& psi, TailWeights weights) {
  const double t = pr.grid.node(i);
  return LocalData{pr.G11(t, y), pr.G12(t, y), pr.G22(t, y),
                   pr.g1(t, y) + tail_integral(pr, pr.F1, pr.m, i, y, psi, weights),
                   pr.g2(t, y) + tail_integral(pr, pr.F2, pr.n, i, y, psi, weights)};
}

void check_psi(const LQCProblem& pr, const NodeVectors& psi) {
  if (psi.size() != pr.grid.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "psi needs one covector per node");
  }
  for (const auto& x : psi) {
    if (x.size() != pr.p) throw Error(ErrorCode::kDimensionMismatch, "psi has the wrong size");
  }
}

std::pair<Vec, Vec> lower_controls(const LocalData& d, double t) {
  const auto lu11 = factor(d.G11, ErrorCode::kSingularG11, "G11", t);
  const Mat G21 = d.G12.transpose();
  const Mat G3 = d.G22 - G21 * lu11.solve(d.G12);
  const auto lu3 = factor(G3, ErrorCode::kSingularG3, "G3", t);
  const Vec v = lu3.solve(G21 * lu11.solve(d.a1) - d.a2);
  const Vec u = -lu11.solve(d.G12 * v + d.a1);
  return {u, v};
}

std::pair<Vec, Vec> upper_controls(const LocalData& d, double t) {
  // Mirror of the lower game: G22 and G4 = G11 − G12G22⁻¹G21 take the roles
  // of G11 and G3.
  const auto lu22 = factor(d.G22, ErrorCode::kSingularG11, "G22", t);
  const Mat G21 = d.G12.transpose();
  const Mat G4 = d.G11 - d.G12 * lu22.solve(G21);
  const auto lu4 = factor(G4, ErrorCode::kSingularG3, "G4", t);
  const Vec u = lu4.solve(d.G12 * lu22.solve(d.a2) - d.a1);
  const Vec v = -lu22.solve(G21 * u + d.a2);
  return {u, v};
}

std::pair<Vec, Vec> controls_at(const LQCProblem& pr, GameSide side, std::size_t i,
                                const Vec& y, const NodeVectors& psi) {
  const LocalData d = local_data(pr, i, y, psi, TailWeights::kAdjoint);
  return side == GameSide::kLower ? lower_controls(d, pr.grid.node(i))
                                  : upper_controls(d, pr.grid.node(i));
}

// State solve with the feedback laws at a frozen costate. The implicit
// diagonal term is resolved by fixed-point iteration (its weight is O(h)).
struct FeedbackTrajectory {
  NodeVectors y, u, v;
};

FeedbackTrajectory feedback_state(const LQCProblem& pr, GameSide side,
                                  const NodeVectors& psi) {
  const auto& g = pr.grid;
  const auto& F = g.forward_table();
  const std::size_t N = g.size();
  FeedbackTrajectory tr{NodeVectors(N), NodeVectors(N), NodeVectors(N)};
  for (std::size_t i = 0; i < N; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double t = g.node(i);
    Vec base = pr.y0[i];
    for (std::size_t j = 0; j < i; ++j) {
      const double w = F(ii, static_cast<Eigen::Index>(j));
      if (w != 0.0) base += w * dynamics(pr, t, g.node(j), tr.y[j], tr.u[j], tr.v[j]);
    }
    const double wd = F(ii, ii);
    Vec y = i > 0 ? tr.y[i - 1] : base;
    if (wd == 0.0) y = base;
    auto [u, v] = controls_at(pr, side, i, y, psi);
    for (int it = 0; wd != 0.0; ++it) {
      const Vec next = base + wd * dynamics(pr, t, t, y, u, v);
      const double change = (next - y).cwiseAbs().maxCoeff();
      y = next;
      std::tie(u, v) = controls_at(pr, side, i, y, psi);
      if (change <= 1e-15 * std::max(1.0, y.cwiseAbs().maxCoeff())) break;
      if (it == 200) {
        throw Error(ErrorCode::kNoConvergence,
                    "implicit state step did not settle at t = " + std::to_string(t));
      }
    }
    tr.y[i] = y;
    tr.u[i] = u;
    tr.v[i] = v;
  }
  return tr;
}

double max_diff(const NodeVectors& a, const NodeVectors& b) {
  return a.empty() || b.empty() ? 0.0 : max_abs_diff(a, b);
}

}  // namespace

Vec dynamics(const LQCProblem& pr, double t, double s, const Vec& y, const Vec& u,
             const Vec& v) {
  return pr.f0(t, s, y) + pr.F1(t, s, y) * u + pr.F2(t, s, y) * v;
}

double running_cost(const LQCProblem& pr, double t, const Vec& y, const Vec& u,
                    const Vec& v) {
  return pr.g0(t, y) + pr.g1(t, y).dot(u) + pr.g2(t, y).dot(v) +
         0.5 * u.dot(pr.G11(t, y) * u) + u.dot(pr.G12(t, y) * v) +
         0.5 * v.dot(pr.G22(t, y) * v);
}

Vec running_cost_gradient(const LQCProblem& pr, double t, const Vec& y, const Vec& u,
                          const Vec& v) {
  if (pr.cost_y) return pr.cost_y(t, y, u, v);
  const double h = fd_step(y);
  Vec grad(y.size());
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    Vec yp = y, ym = y;
    yp(k) += h;
    ym(k) -= h;
    grad(k) = (running_cost(pr, t, yp, u, v) - running_cost(pr, t, ym, u, v)) / (2 * h);
  }
  return grad;
}

Mat dynamics_jacobian(const LQCProblem& pr, double t, double s, const Vec& y,
                      const Vec& u, const Vec& v) {
  if (pr.dynamics_y) return pr.dynamics_y(t, s, y, u, v);
  const double h = fd_step(y);
  Mat J(y.size(), y.size());
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    Vec yp = y, ym = y;
    yp(k) += h;
    ym(k) -= h;
    J.col(k) = (dynamics(pr, t, s, yp, u, v) - dynamics(pr, t, s, ym, u, v)) / (2 * h);
  }
  return J;
}

double hamiltonian(const LQCProblem& pr, double t, const Vec& y, const Vec& u,
                   const Vec& v, const NodeVectors& psi, TailWeights weights) {
  const std::size_t i = pr.grid.index_of(t);
  check_psi(pr, psi);
  return running_cost(pr, t, y, u, v) + tail_f0(pr, i, y, psi, weights)(0) +
         tail_integral(pr, pr.F1, pr.m, i, y, psi, weights).dot(u) +
         tail_integral(pr, pr.F2, pr.n, i, y, psi, weights).dot(v);
}

Vec control_u_given_v(const LQCProblem& pr, double t, const Vec& y, const Vec& v,
                      const NodeVectors& psi, TailWeights weights) {
  check_psi(pr, psi);
  const LocalData d = local_data(pr, pr.grid.index_of(t), y, psi, weights);
  return -factor(d.G11, ErrorCode::kSingularG11, "G11", t).solve(d.G12 * v + d.a1);
}

Vec control_v_lower(const LQCProblem& pr, double t, const Vec& y,
                    const NodeVectors& psi, TailWeights weights) {
  check_psi(pr, psi);
  return lower_controls(local_data(pr, pr.grid.index_of(t), y, psi, weights), t).second;
}

Vec control_u_lower(const LQCProblem& pr, double t, const Vec& y,
                    const NodeVectors& psi, TailWeights weights) {
  check_psi(pr, psi);
  const std::size_t i = pr.grid.index_of(t);
  const auto& T = tail_weights(pr.grid, weights);
  const Mat G11 = pr.G11(t, y);
  const Mat G12 = pr.G12(t, y);
  const Mat G21 = G12.transpose();
  const auto lu11 = factor(G11, ErrorCode::kSingularG11, "G11", t);
  const auto lu3 = factor(pr.G22(t, y) - G21 * lu11.solve(G12), ErrorCode::kSingularG3,
                          "G3", t);
  const Vec g3 = G21 * lu11.solve(pr.g1(t, y)) - pr.g2(t, y);
  const Vec g4 = lu3.solve(g3);
  Vec u = -lu11.solve(G12 * g4 + pr.g1(t, y));  // g5ᵀ
  for (std::size_t k = i; k < pr.grid.size(); ++k) {
    const double w = T(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    if (w == 0.0) continue;
    const double s = pr.grid.node(k);
    const Mat F1t = pr.F1(s, t, y).transpose();
    const Mat F3t = G21 * lu11.solve(F1t) - pr.F2(s, t, y).transpose();
    const Mat F4t = lu3.solve(F3t);
    const Mat F5t = -lu11.solve(G12 * F4t + F1t);
    u += w * (F5t * psi[k]);
  }
  return u;
}

Vec control_v_given_u(const LQCProblem& pr, double t, const Vec& y, const Vec& u,
                      const NodeVectors& psi, TailWeights weights) {
  check_psi(pr, psi);
  const LocalData d = local_data(pr, pr.grid.index_of(t), y, psi, weights);
  return -factor(d.G22, ErrorCode::kSingularG11, "G22", t)
              .solve(d.G12.transpose() * u + d.a2);
}

Vec control_u_upper(const LQCProblem& pr, double t, const Vec& y,
                    const NodeVectors& psi, TailWeights weights) {
  check_psi(pr, psi);
  return upper_controls(local_data(pr, pr.grid.index_of(t), y, psi, weights), t).first;
}

Vec control_v_upper(const LQCProblem& pr, double t, const Vec& y,
                    const NodeVectors& psi, TailWeights weights) {
  check_psi(pr, psi);
  return upper_controls(local_data(pr, pr.grid.index_of(t), y, psi, weights), t).second;
}

Mat schur_g3(const LQCProblem& pr, double t, const Vec& y) {
  const Mat G12 = pr.G12(t, y);
  const auto lu11 = factor(pr.G11(t, y), ErrorCode::kSingularG11, "G11", t);
  return pr.G22(t, y) - G12.transpose() * lu11.solve(G12);
}

NodeVectors solve_state(const LQCProblem& pr, const NodeVectors& u,
                        const NodeVectors& v) {
  const auto& g = pr.grid;
  const auto& F = g.forward_table();
  const std::size_t N = g.size();
  if (u.size() != N || v.size() != N || pr.y0.size() != N) {
    throw Error(ErrorCode::kDimensionMismatch, "controls and y0 need one vector per node");
  }
  NodeVectors y(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double t = g.node(i);
    Vec base = pr.y0[i];
    for (std::size_t j = 0; j < i; ++j) {
      const double w = F(ii, static_cast<Eigen::Index>(j));
      if (w != 0.0) base += w * dynamics(pr, t, g.node(j), y[j], u[j], v[j]);
    }
    const double wd = F(ii, ii);
    Vec yi = base;
    for (int it = 0; wd != 0.0; ++it) {
      const Vec next = base + wd * dynamics(pr, t, t, yi, u[i], v[i]);
      const double change = (next - yi).cwiseAbs().maxCoeff();
      yi = next;
      if (change <= 1e-15 * std::max(1.0, yi.cwiseAbs().maxCoeff())) break;
      if (it == 200) {
        throw Error(ErrorCode::kNoConvergence,
                    "implicit state step did not settle at t = " + std::to_string(t));
      }
    }
    y[i] = yi;
  }
  return y;
}

NodeVectors solve_costate(const LQCProblem& pr, const NodeVectors& y,
                          const NodeVectors& u, const NodeVectors& v) {
  const auto& g = pr.grid;
  const std::size_t N = g.size();
  NodeVectors forcing(N);
  Kernel2 jac(N, pr.p, pr.p);
  for (std::size_t i = 0; i < N; ++i) {
    forcing[i] = running_cost_gradient(pr, g.node(i), y[i], u[i], v[i]);
    for (std::size_t k = 0; k < N; ++k) {
      jac.at(k, i) = k >= i ? dynamics_jacobian(pr, g.node(k), g.node(i), y[i], u[i], v[i])
                            : Mat::Zero(pr.p, pr.p);
    }
  }
  return solve_backward(forcing, jac, g, TailWeights::kAdjoint);
}

double cost_along(const LQCProblem& pr, const NodeVectors& y, const NodeVectors& u,
                  const NodeVectors& v) {
  double J = 0.0;
  for (std::size_t i = 0; i < pr.grid.size(); ++i) {
    J += pr.grid.weight(i) * running_cost(pr, pr.grid.node(i), y[i], u[i], v[i]);
  }
  return J;
}

double evaluate_cost(const LQCProblem& pr, const NodeVectors& u, const NodeVectors& v) {
  return cost_along(pr, solve_state(pr, u, v), u, v);
}

LQCSolution solve_game(const LQCProblem& pr, GameSide side, const LQCOptions& options) {
  if (!(options.damping > 0.0 && options.damping <= 1.0)) {
    throw Error(ErrorCode::kValidationError, "damping must lie in (0, 1]");
  }
  if (pr.y0.size() != pr.grid.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "y0 needs one vector per node");
  }
  const std::size_t N = pr.grid.size();
  NodeVectors psi = zero_vectors(N, pr.p);
  NodeVectors y_prev;
  LQCSolution sol;
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < options.max_iter; ++it) {
    const FeedbackTrajectory tr = feedback_state(pr, side, psi);
    const NodeVectors psi_new = solve_costate(pr, tr.y, tr.u, tr.v);
    const double scale = std::max(1.0, max_norm(psi_new));
    residual = std::max(max_abs_diff(psi_new, psi), max_diff(tr.y, y_prev)) / scale;
    if (!std::isfinite(residual)) break;
    y_prev = tr.y;
    if (residual < options.tol) {
      psi = psi_new;
      ++it;
      break;
    }
    for (std::size_t i = 0; i < N; ++i) {
      psi[i] = (1.0 - options.damping) * psi[i] + options.damping * psi_new[i];
    }
  }
  if (!(residual < options.tol)) {
    throw Error(ErrorCode::kNoConvergence,
                "Picard iteration stopped after " + std::to_string(it) +
                    " iterations with residual " + std::to_string(residual));
  }
  const FeedbackTrajectory tr = feedback_state(pr, side, psi);
  sol.pair = CostatePair{tr.y, psi, true, it, residual};
  sol.u = tr.u;
  sol.v = tr.v;
  sol.value = cost_along(pr, tr.y, tr.u, tr.v);
  return sol;
}

LQCSolution solve_lower_game(const LQCProblem& pr, const LQCOptions& options) {
  return solve_game(pr, GameSide::kLower, options);
}

LQCSolution solve_upper_game(const LQCProblem& pr, const LQCOptions& options) {
  return solve_game(pr, GameSide::kUpper, options);
}

LQCResiduals recheck(const LQCProblem& pr, GameSide side, const NodeVectors& y,
                     const NodeVectors& psi, const NodeVectors& u,
                     const NodeVectors& v) {
  const auto& g = pr.grid;
  const auto& F = g.forward_table();
  const auto& T = g.adjoint_tail_table();
  const std::size_t N = g.size();
  LQCResiduals r;
  for (std::size_t i = 0; i < N; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double t = g.node(i);
    Vec state = y[i] - pr.y0[i];
    for (std::size_t j = 0; j <= i; ++j) {
      state -= F(ii, static_cast<Eigen::Index>(j)) * dynamics(pr, t, g.node(j), y[j], u[j], v[j]);
    }
    Vec costate = psi[i] - running_cost_gradient(pr, t, y[i], u[i], v[i]);
    for (std::size_t k = i; k < N; ++k) {
      costate -= T(ii, static_cast<Eigen::Index>(k)) *
                 (dynamics_jacobian(pr, g.node(k), t, y[i], u[i], v[i]).transpose() * psi[k]);
    }
    const Vec uu = side == GameSide::kLower ? control_u_lower(pr, t, y[i], psi)
                                            : control_u_upper(pr, t, y[i], psi);
    const Vec vv = side == GameSide::kLower ? control_v_lower(pr, t, y[i], psi)
                                            : control_v_upper(pr, t, y[i], psi);
    r.state = std::max(r.state, state.cwiseAbs().maxCoeff());
    r.costate = std::max(r.costate, costate.cwiseAbs().maxCoeff());
    double c = 0.0;
    if (uu.size()) c = std::max(c, (uu - u[i]).cwiseAbs().maxCoeff());
    if (vv.size()) c = std::max(c, (vv - v[i]).cwiseAbs().maxCoeff());
    r.controls = std::max(r.controls, c);
  }
  return r;
}

}  // namespace vgame
