#include "vgame/pursuit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "vgame/volterra.hpp"

namespace vgame {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

bool symmetric(const MatrixXd& S) {
  return S.rows() == S.cols() &&
         (S - S.transpose()).cwiseAbs().maxCoeff() <=
             1e-12 * std::max(1.0, S.cwiseAbs().maxCoeff());
}

double abs_max(const VectorXd& x) { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; }

Eigen::SelfAdjointEigenSolver<MatrixXd> eigen(const MatrixXd& S) {
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(0.5 * (S + S.transpose()));
}

MatrixXd inverse_of(const MatrixXd& S, const char* name) {
  if (S.rows() == 0) return S;
  Eigen::PartialPivLU<MatrixXd> lu(S);
  if (!(lu.rcond() > 1e-13)) {
    throw Error(ErrorCode::kSingularWeight, std::string(name) + " is singular");
  }
  return lu.inverse();
}

MatrixXd block_diagonal(const MatrixXd& block, std::size_t copies) {
  const Index d = block.rows();
  MatrixXd out = MatrixXd::Zero(static_cast<Index>(copies) * d, static_cast<Index>(copies) * d);
  for (std::size_t i = 0; i < copies; ++i) {
    out.block(static_cast<Index>(i) * d, static_cast<Index>(i) * d, d, d) = block;
  }
  return out;
}

void require_grid_end(const TimeGrid& grid, double t1) {
  require(std::abs(grid.t1() - t1) <= 1e-12 * std::max(1.0, std::abs(t1)),
          ErrorCode::kGridMismatch, "grid must end at t1");
}

double running_cost(const PursuitProblem& pr, const VectorXd& y, const VectorXd& u,
                    const VectorXd& v) {
  return 0.5 * (y.dot(pr.M1 * y) + u.dot(pr.Q * u) + v.dot(pr.R * v));
}

// Leading eigenpair of M with a deterministic sign for the vector.
std::pair<double, VectorXd> leading_direction(const MatrixXd& M) {
  const auto es = eigen(M);
  const Index last = M.rows() - 1;
  VectorXd e = es.eigenvectors().col(last);
  Index k = 0;
  e.cwiseAbs().maxCoeff(&k);
  if (e(k) < 0) e = -e;
  return {std::max(0.0, es.eigenvalues()(last)), e};
}

Index numerical_rank(const MatrixXd& M) {
  const VectorXd ev = eigen(M).eigenvalues();
  const double cut = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  return static_cast<Index>((ev.array() > cut).count());
}

// Everything about the inner pass that does not depend on Ψ: the
// state-eliminated costate system is factored once per grid, and the pass
// becomes ψ = ψ0 + PΨ followed by matrix products.
class EliminatedSystem {
 public:
  EliminatedSystem(const PursuitProblem& pr, const TimeGrid& grid)
      : pr_(pr), grid_(grid), ker_(tabulate(pr, grid)),
        tr_(transform(ker_.y0, ker_.A, ker_.B, ker_.C, grid)) {
    const std::size_t N = grid.size();
    const Index p = pr.p(), m = pr.m(), n = pr.n();
    const auto Ni = static_cast<Index>(N);
    const MatrixXd& T = grid.tail_table();
    MatrixXd TA = MatrixXd::Zero(Ni * p, Ni * p);
    MatrixXd TB = MatrixXd::Zero(Ni * m, Ni * p);
    MatrixXd TC = MatrixXd::Zero(Ni * n, Ni * p);
    MatrixXd aA(Ni * p, p), aB(Ni * m, p), aC(Ni * n, p);
    for (std::size_t i = 0; i < N; ++i) {
      const auto ii = static_cast<Index>(i);
      for (std::size_t k = i; k < N; ++k) {
        const auto kk = static_cast<Index>(k);
        const double w = T(ii, kk);
        if (w == 0.0) continue;
        TA.block(ii * p, kk * p, p, p) = w * ker_.A.at(k, i).transpose();
        TB.block(ii * m, kk * p, m, p) = w * ker_.B.at(k, i).transpose();
        TC.block(ii * n, kk * p, n, p) = w * ker_.C.at(k, i).transpose();
      }
      aA.block(ii * p, 0, p, p) = ker_.A.at(N - 1, i).transpose();
      aB.block(ii * m, 0, m, p) = ker_.B.at(N - 1, i).transpose();
      aC.block(ii * n, 0, n, p) = ker_.C.at(N - 1, i).transpose();
    }
    const MatrixXd Qinv = block_diagonal(inverse_of(pr.Q, "Q"), N);
    const MatrixXd Rinv = block_diagonal(inverse_of(pr.R, "R"), N);
    const MatrixXd M1 = block_diagonal(pr.M1, N);
    u_from_psi_ = Qinv * TB;
    u_from_cap_ = Qinv * aB;
    v_from_psi_ = Rinv * TC;
    v_from_cap_ = Rinv * aC;
    y1_ = stack(tr_.y1);
    const MatrixXd system = MatrixXd::Identity(Ni * p, Ni * p) - TA +
                            M1 * (tr_.state_from_u * u_from_psi_ + tr_.state_from_v * v_from_psi_);
    const MatrixXd rhs_cap =
        aA - M1 * (tr_.state_from_u * u_from_cap_ + tr_.state_from_v * v_from_cap_);
    Eigen::PartialPivLU<MatrixXd> lu(system);
    if (!(lu.rcond() > 1e-13)) {
      throw Error(ErrorCode::kSingularSystem, "state-eliminated costate system is singular");
    }
    psi_free_ = lu.solve(M1 * y1_);
    psi_per_cap_ = lu.solve(rhs_cap);
  }

  VectorXd psi(const VectorXd& cap) const { return psi_free_ + psi_per_cap_ * cap; }

  InnerPass pass(const VectorXd& cap) const {
    const std::size_t N = grid_.size();
    const VectorXd psi_s = psi(cap);
    const VectorXd u_s = -(u_from_psi_ * psi_s + u_from_cap_ * cap);
    const VectorXd v_s = -(v_from_psi_ * psi_s + v_from_cap_ * cap);
    const VectorXd y_s = y1_ + tr_.state_from_u * u_s + tr_.state_from_v * v_s;
    InnerPass out;
    out.psi = unstack(psi_s, N, pr_.p());
    out.u = unstack(u_s, N, pr_.m());
    out.v = unstack(v_s, N, pr_.n());
    out.y = unstack(y_s, N, pr_.p());
    out.Y = out.y.back();
    out.U = out.u.back();
    out.V = out.v.back();
    out.W = terminal_velocity(pr_, grid_, out.y, out.u, out.v);
    return out;
  }

  const ResolventTransform& transform_data() const { return tr_; }

 private:
  const PursuitProblem& pr_;
  const TimeGrid& grid_;
  PursuitKernels ker_;
  ResolventTransform tr_;
  MatrixXd u_from_psi_, u_from_cap_, v_from_psi_, v_from_cap_;
  VectorXd y1_, psi_free_;
  MatrixXd psi_per_cap_;
};

VectorXd join(const VectorXd& Y, const VectorXd& U, const VectorXd& V, const VectorXd& W) {
  VectorXd z(Y.size() + U.size() + V.size() + W.size());
  z << Y, U, V, W;
  return z;
}

std::string sign_name(double x) { return x > 0 ? "+" : (x < 0 ? "-" : "0"); }

}  // namespace

void PursuitProblem::validate() const {
  const Index p_ = p(), m_ = m(), n_ = n();
  require(p_ > 0, ErrorCode::kDimensionMismatch, "M must be p×p with p ≥ 1");
  require(y0.rows() == p_ && y0.cols() == 1, ErrorCode::kDimensionMismatch, "y0 must be p×1");
  require(A.rows() == p_ && A.cols() == p_, ErrorCode::kDimensionMismatch, "A must be p×p");
  require(B.rows() == p_ && B.cols() == m_, ErrorCode::kDimensionMismatch, "B must be p×m");
  require(C.rows() == p_ && C.cols() == n_, ErrorCode::kDimensionMismatch, "C must be p×n");
  require(M0.rows() == p_ && M1.rows() == p_, ErrorCode::kDimensionMismatch,
          "M0 and M1 must be p×p");
  for (const auto* k : {&y0, &A, &B, &C}) {
    require(k->is_analytic(), ErrorCode::kValidationError,
            "pursuit kernels must be analytic (table kernels have no time derivative)");
  }
  require(symmetric(M) && symmetric(M0) && symmetric(M1) && symmetric(Q) && symmetric(R),
          ErrorCode::kInvariantViolated, "M, M0, M1, Q, R must be symmetric");
  capture_root(M);
  if (m_ > 0) {
    require(eigen(Q).eigenvalues()(0) > 0, ErrorCode::kInvariantViolated,
            "Q must be positive definite");
  }
  if (n_ > 0) {
    require(eigen(R).eigenvalues()(n_ - 1) < 0, ErrorCode::kInvariantViolated,
            "R must be negative definite");
  }
  require(t0 < t_lo && t_lo < t_hi, ErrorCode::kValidationError,
          "t1 bracket must satisfy t0 < t_lo < t_hi");
}

TimeGrid PursuitProblem::grid_for(double t1) const { return make_grid(t0, t1, nodes, rule); }

MatrixXd capture_root(const MatrixXd& M) {
  require(symmetric(M), ErrorCode::kInvariantViolated, "M must be symmetric");
  const auto es = eigen(M);
  VectorXd ev = es.eigenvalues();
  const double floor = -1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff());
  require(ev.size() == 0 || ev(0) >= floor, ErrorCode::kInvariantViolated,
          "M must be nonnegative definite");
  ev = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double capture_residual(const PursuitProblem& pr, const VectorXd& Y) {
  return 0.5 * Y.dot(pr.M * Y);
}

double signed_capture(const PursuitProblem& pr, const VectorXd& Y) {
  const auto [mu, e] = leading_direction(pr.M);
  return std::sqrt(mu) * e.dot(Y);
}

VectorXd big_psi(const PursuitProblem& pr, const TerminalState& ts) {
  const VectorXd MY = pr.M * ts.Y;
  const double d = MY.dot(ts.W);
  if (d == 0.0 || std::abs(d) <= 1e-14 * MY.norm() * ts.W.norm()) {
    throw Error(ErrorCode::kTransversalityViolated, "YᵀMW vanishes");
  }
  const double bracket = ts.Y.dot(pr.M0 * ts.W) + running_cost(pr, ts.Y, ts.U, ts.V);
  return -(bracket / d) * ((pr.M + pr.M0) * ts.Y);
}

std::string_view to_string(MultiplierRule rule) {
  return rule == MultiplierRule::kClosedForm ? "closed_form" : "elimination";
}

MultiplierRule parse_multiplier_rule(std::string_view name) {
  if (name == "closed_form") return MultiplierRule::kClosedForm;
  if (name == "elimination") return MultiplierRule::kElimination;
  throw Error(ErrorCode::kValidationError,
              "unknown multiplier rule '" + std::string(name) + "'");
}

std::pair<VectorXd, double> capture_multipliers(const PursuitProblem& pr, const VectorXd& Y,
                                                const VectorXd& U, const VectorXd& V,
                                                const VectorXd& W, MultiplierRule rule) {
  const bool closed = rule == MultiplierRule::kClosedForm;
  const VectorXd M0Y = pr.M0 * Y;
  const double bracket = M0Y.dot(W) + running_cost(pr, Y, U, V);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto degenerate = [&]() -> std::pair<VectorXd, double> {
    if (bracket != 0.0) {
      throw Error(ErrorCode::kTransversalityViolated,
                  "Eulerian derivative of the capture criterion vanishes");
    }
    return {closed ? VectorXd::Zero(Y.size()) : M0Y, 0.0};
  };

  if (numerical_rank(pr.M) == 1) {
    // M = μeeᵀ: YᵀMW = μ(eᵀY)(eᵀW) and YᵀM = μ(eᵀY)eᵀ, so eᵀY cancels.
    const auto [mu, e] = leading_direction(pr.M);
    const double a = e.dot(Y);
    const double c = e.dot(W);
    if (c == 0.0 || std::abs(c) <= 1e-14 * W.norm()) return degenerate();
    const double omega = a != 0.0 ? -bracket / (mu * a * c) : nan;
    if (!closed) return {-(bracket / c) * e + M0Y, omega};
    VectorXd extra = VectorXd::Zero(Y.size());
    if (Y.size() == 1) {
      extra = (pr.M0 / mu) * e;
    } else if (M0Y.norm() != 0.0) {
      if (a == 0.0) {
        throw Error(ErrorCode::kTransversalityViolated,
                    "closed-form multiplier is singular: eᵀY = 0 with M0Y ≠ 0");
      }
      extra = M0Y / (mu * a);
    }
    return {-(bracket / c) * (e + extra), omega};
  }

  const VectorXd MY = pr.M * Y;
  const double d = MY.dot(W);
  if (d == 0.0 || std::abs(d) <= 1e-14 * MY.norm() * W.norm()) return degenerate();
  const double omega = -bracket / d;
  return {closed ? VectorXd(omega * (MY + M0Y)) : VectorXd(omega * MY + M0Y), omega};
}

Multipliers eliminate_multipliers(const GeneralTerminalData& data) {
  const double eulerian = data.grad_Phi.dot(data.W) + data.Phi_t1;
  const double scale = data.grad_Phi.norm() * data.W.norm() + std::abs(data.Phi_t1);
  if (eulerian == 0.0 || std::abs(eulerian) <= 1e-14 * scale) {
    throw Error(ErrorCode::kTransversalityViolated, "DΦ/Dt1 vanishes");
  }
  Multipliers out;
  out.omega = -(data.grad_F.dot(data.W) + data.F_t1 + data.G) / eulerian;
  out.psi_cap = out.omega * data.grad_Phi + data.grad_F;
  return out;
}

GeneralTerminalData terminal_data(const PursuitProblem& pr, const VectorXd& Y,
                                  const VectorXd& U, const VectorXd& V, const VectorXd& W) {
  GeneralTerminalData d;
  d.grad_F = pr.M0 * Y;
  d.grad_Phi = pr.M * Y;
  d.G = running_cost(pr, Y, U, V);
  d.W = W;
  return d;
}

GeneralPursuitModel general_model(const PursuitProblem& pr) {
  GeneralPursuitModel model;
  model.F = [M0 = pr.M0](double, const VectorXd& Y, const VectorXd&, const VectorXd&) {
    return 0.5 * Y.dot(M0 * Y);
  };
  model.G = [pr](double, const VectorXd& y, const VectorXd& u, const VectorXd& v) {
    return running_cost(pr, y, u, v);
  };
  model.Phi = [M = pr.M](double, const VectorXd& Y, const VectorXd&, const VectorXd&) {
    return 0.5 * Y.dot(M * Y);
  };
  model.f = [pr](double t, double s, const VectorXd& y, const VectorXd& u,
                 const VectorXd& v) -> VectorXd {
    return pr.A.evaluate(t, s) * y + pr.B.evaluate(t, s) * u + pr.C.evaluate(t, s) * v;
  };
  return model;
}

double general_hamiltonian(const GeneralPursuitModel& model, const TimeGrid& grid, double t,
                           const VectorXd& y, const VectorXd& u, const VectorXd& v,
                           const VectorXd& Y, const VectorXd& U, const VectorXd& V,
                           const NodeVectors& psi, const VectorXd& psi_cap, double omega) {
  const std::size_t i = grid.index_of(t);
  require(psi.size() == grid.size(), ErrorCode::kLengthMismatch,
          "psi needs one covector per node");
  const double t1 = grid.t1();
  double H = model.F(t1, Y, U, V) + model.G(t, y, u, v) + omega * model.Phi(t1, Y, U, V) +
             psi_cap.dot(model.f(t1, t, y, u, v));
  const MatrixXd& T = grid.tail_table();
  for (std::size_t k = i; k < grid.size(); ++k) {
    const double w = T(static_cast<Index>(i), static_cast<Index>(k));
    if (w != 0.0) H += w * psi[k].dot(model.f(grid.node(k), t, y, u, v));
  }
  return H;
}

PursuitKernels tabulate(const PursuitProblem& pr, const TimeGrid& grid) {
  PursuitKernels k{materialize2(pr.A, grid), materialize2(pr.B, grid),
                   materialize2(pr.C, grid), NodeVectors(grid.size())};
  for (std::size_t i = 0; i < grid.size(); ++i) k.y0[i] = pr.y0.evaluate(grid.node(i)).col(0);
  return k;
}

namespace {

NodeVectors costate_forcing(const PursuitProblem& pr, const PursuitKernels& ker,
                            const VectorXd& psi_cap, const NodeVectors& y) {
  const std::size_t N = ker.y0.size();
  require(y.size() == N, ErrorCode::kLengthMismatch, "y needs one vector per node");
  NodeVectors f(N);
  for (std::size_t i = 0; i < N; ++i) {
    f[i] = pr.M1 * y[i] + ker.A.at(N - 1, i).transpose() * psi_cap;
  }
  return f;
}

}  // namespace

NodeVectors costate_solve(const PursuitProblem& pr, const TimeGrid& grid, double t1,
                          const VectorXd& psi_cap, const NodeVectors& y) {
  require_grid_end(grid, t1);
  const PursuitKernels ker = tabulate(pr, grid);
  return solve_backward(costate_forcing(pr, ker, psi_cap, y), ker.A, grid,
                        TailWeights::kQuadrature);
}

NodeVectors costate_by_resolvent(const PursuitProblem& pr, const TimeGrid& grid,
                                 const VectorXd& psi_cap, const NodeVectors& y) {
  const PursuitKernels ker = tabulate(pr, grid);
  const Kernel2 sigma = backward_resolvent(ker.A, grid, TailWeights::kQuadrature);
  return apply_backward_resolvent(costate_forcing(pr, ker, psi_cap, y), sigma, grid,
                                  TailWeights::kQuadrature);
}

std::pair<NodeVectors, NodeVectors> controls_from_costate(const PursuitProblem& pr,
                                                          const TimeGrid& grid,
                                                          const NodeVectors& psi,
                                                          const VectorXd& psi_cap) {
  const std::size_t N = grid.size();
  require(psi.size() == N, ErrorCode::kLengthMismatch, "psi needs one covector per node");
  const PursuitKernels ker = tabulate(pr, grid);
  const MatrixXd Qinv = inverse_of(pr.Q, "Q");
  const MatrixXd Rinv = inverse_of(pr.R, "R");
  const MatrixXd& T = grid.tail_table();
  NodeVectors u(N), v(N);
  for (std::size_t i = 0; i < N; ++i) {
    VectorXd bu = ker.B.at(N - 1, i).transpose() * psi_cap;
    VectorXd bv = ker.C.at(N - 1, i).transpose() * psi_cap;
    for (std::size_t k = i; k < N; ++k) {
      const double w = T(static_cast<Index>(i), static_cast<Index>(k));
      if (w == 0.0) continue;
      bu += w * ker.B.at(k, i).transpose() * psi[k];
      bv += w * ker.C.at(k, i).transpose() * psi[k];
    }
    u[i] = -Qinv * bu;
    v[i] = -Rinv * bv;
  }
  return {u, v};
}

NodeVectors coupled_costate_solve(const PursuitProblem& pr, const TimeGrid& grid, double t1,
                                  const VectorXd& psi_cap) {
  require_grid_end(grid, t1);
  return unstack(EliminatedSystem(pr, grid).psi(psi_cap), grid.size(), pr.p());
}

VectorXd terminal_velocity(const PursuitProblem& pr, const TimeGrid& grid, const NodeVectors& y,
                           const NodeVectors& u, const NodeVectors& v) {
  const std::size_t N = grid.size();
  const double t1 = grid.t1();
  VectorXd W = pr.y0.dt(t1).col(0) + pr.A.evaluate(t1, t1) * y.back() +
               pr.B.evaluate(t1, t1) * u.back() + pr.C.evaluate(t1, t1) * v.back();
  for (std::size_t j = 0; j < N; ++j) {
    const double s = grid.node(j);
    W += grid.weight(j) *
         (pr.A.dt(t1, s) * y[j] + pr.B.dt(t1, s) * u[j] + pr.C.dt(t1, s) * v[j]);
  }
  return W;
}

InnerPass inner_pass(const PursuitProblem& pr, const TimeGrid& grid, const VectorXd& psi_cap) {
  return EliminatedSystem(pr, grid).pass(psi_cap);
}

TerminalResiduals terminal_residuals(const PursuitProblem& pr, const TimeGrid& grid,
                                     const TerminalState& ts, const NodeVectors& u,
                                     const NodeVectors& v, const NodeVectors& y) {
  require_grid_end(grid, ts.t1);
  const std::size_t N = grid.size();
  require(u.size() == N && v.size() == N && y.size() == N, ErrorCode::kLengthMismatch,
          "trajectories need one vector per node");
  const PursuitKernels ker = tabulate(pr, grid);
  const ResolventTransform tr = transform(ker.y0, ker.A, ker.B, ker.C, grid);
  TerminalResiduals r;
  const VectorXd U = -inverse_of(pr.Q, "Q") * ker.B.at(N - 1, N - 1).transpose() * ts.psi_cap;
  const VectorXd V = -inverse_of(pr.R, "R") * ker.C.at(N - 1, N - 1).transpose() * ts.psi_cap;
  r.u = std::max(abs_max(ts.U - U), abs_max(ts.U - u.back()));
  r.v = std::max(abs_max(ts.V - V), abs_max(ts.V - v.back()));
  r.y = abs_max(ts.Y - apply(tr, u, v).back());
  r.w = abs_max(ts.W - terminal_velocity(pr, grid, y, u, v));
  return r;
}

std::vector<std::pair<std::string, double>> PursuitResiduals::named() const {
  return {{"capture", capture},
          {"terminal_u", terminal_u},
          {"terminal_v", terminal_v},
          {"terminal_y", terminal_y},
          {"terminal_w", terminal_w},
          {"state", state},
          {"costate", costate},
          {"stationarity", stationarity},
          {"multiplier", multiplier},
          {"variational_capture", variational_capture}};
}

double PursuitResiduals::max() const {
  double out = 0.0;
  for (const auto& [name, value] : named()) {
    // NaN compares false; treat it as failure.
    out = std::isnan(value) ? std::numeric_limits<double>::infinity() : std::max(out, value);
  }
  return out;
}

PursuitResiduals pursuit_residuals(const PursuitProblem& pr, const TimeGrid& grid,
                                   const TerminalState& ts, const NodeVectors& psi,
                                   const NodeVectors& u, const NodeVectors& v,
                                   const NodeVectors& y, MultiplierRule rule) {
  const std::size_t N = grid.size();
  require(psi.size() == N, ErrorCode::kLengthMismatch, "psi needs one covector per node");
  const PursuitKernels ker = tabulate(pr, grid);
  PursuitResiduals r;
  r.capture = (capture_root(pr.M) * ts.Y).norm() / std::max(1.0, ts.Y.norm());

  const TerminalResiduals tr = terminal_residuals(pr, grid, ts, u, v, y);
  r.terminal_u = tr.u;
  r.terminal_v = tr.v;
  r.terminal_y = std::max(tr.y, abs_max(ts.Y - y.back()));
  r.terminal_w = tr.w;

  const MatrixXd& F = grid.forward_table();
  const MatrixXd& T = grid.tail_table();
  for (std::size_t i = 0; i < N; ++i) {
    const auto ii = static_cast<Index>(i);
    VectorXd state = y[i] - ker.y0[i];
    for (std::size_t j = 0; j <= i; ++j) {
      state -= F(ii, static_cast<Index>(j)) *
               (ker.A.at(i, j) * y[j] + ker.B.at(i, j) * u[j] + ker.C.at(i, j) * v[j]);
    }
    VectorXd costate = psi[i] - pr.M1 * y[i] - ker.A.at(N - 1, i).transpose() * ts.psi_cap;
    VectorXd gu = pr.Q * u[i] + ker.B.at(N - 1, i).transpose() * ts.psi_cap;
    VectorXd gv = pr.R * v[i] + ker.C.at(N - 1, i).transpose() * ts.psi_cap;
    for (std::size_t k = i; k < N; ++k) {
      const double w = T(ii, static_cast<Index>(k));
      if (w == 0.0) continue;
      costate -= w * ker.A.at(k, i).transpose() * psi[k];
      gu += w * ker.B.at(k, i).transpose() * psi[k];
      gv += w * ker.C.at(k, i).transpose() * psi[k];
    }
    r.state = std::max(r.state, abs_max(state));
    r.costate = std::max(r.costate, abs_max(costate));
    r.stationarity = std::max({r.stationarity, abs_max(gu), abs_max(gv)});
  }

  try {
    const auto [cap, omega] = capture_multipliers(pr, ts.Y, ts.U, ts.V, ts.W, rule);
    r.multiplier = abs_max(ts.psi_cap - cap);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kTransversalityViolated) throw;
    r.multiplier = std::numeric_limits<double>::infinity();
  }
  // Neither F nor Φ depends on t1 explicitly.
  r.variational_capture = std::abs(ts.psi_cap.dot(ts.W) + running_cost(pr, ts.Y, ts.U, ts.V));
  return r;
}

PursuitSolution solve_at(const PursuitProblem& pr, double t1, const PursuitOptions& opt) {
  require(opt.damping > 0.0 && opt.damping <= 1.0, ErrorCode::kValidationError,
          "damping must lie in (0, 1]");
  const TimeGrid grid = pr.grid_for(t1);
  const EliminatedSystem sys(pr, grid);
  const std::size_t N = grid.size();

  // Control-free start.
  const NodeVectors& y_free = sys.transform_data().y1;
  const NodeVectors u_free = zero_vectors(N, pr.m());
  const NodeVectors v_free = zero_vectors(N, pr.n());
  VectorXd Y = y_free.back();
  VectorXd U = VectorXd::Zero(pr.m());
  VectorXd V = VectorXd::Zero(pr.n());
  VectorXd W = terminal_velocity(pr, grid, y_free, u_free, v_free);

  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  while (it < opt.max_iter) {
    ++it;
    const VectorXd cap = capture_multipliers(pr, Y, U, V, W, opt.rule).first;
    const InnerPass next = sys.pass(cap);
    const VectorXd z = join(Y, U, V, W);
    const VectorXd z_next = join(next.Y, next.U, next.V, next.W);
    residual = abs_max(z_next - z) / std::max(1.0, abs_max(z_next));
    const double d = residual < opt.tol ? 1.0 : opt.damping;
    Y = (1 - d) * Y + d * next.Y;
    U = (1 - d) * U + d * next.U;
    V = (1 - d) * V + d * next.V;
    W = (1 - d) * W + d * next.W;
    if (residual < opt.tol) break;
  }
  if (!(residual < opt.tol)) {
    std::ostringstream msg;
    msg << "terminal fixed point at t1 = " << t1 << " stopped after " << it
        << " iterations with residual " << residual;
    throw Error(ErrorCode::kInnerNoConvergence, msg.str());
  }

  const auto [cap, omega] = capture_multipliers(pr, Y, U, V, W, opt.rule);
  InnerPass fin = sys.pass(cap);
  TerminalState ts{t1, fin.Y, fin.U, fin.V, fin.W, cap, omega};
  PursuitSolution sol{grid, ts, std::move(fin.psi), std::move(fin.u), std::move(fin.v),
                      std::move(fin.y), {}, 0.0, true, it, 0};
  sol.residuals = pursuit_residuals(pr, grid, sol.terminal, sol.psi, sol.u_star, sol.v_star,
                                    sol.y_star, opt.rule);
  try {
    const auto closed = capture_multipliers(pr, ts.Y, ts.U, ts.V, ts.W,
                                            MultiplierRule::kClosedForm).first;
    const auto elim = capture_multipliers(pr, ts.Y, ts.U, ts.V, ts.W,
                                          MultiplierRule::kElimination).first;
    sol.elimination_gap = abs_max(closed - elim);
  } catch (const Error&) {
    sol.elimination_gap = std::numeric_limits<double>::quiet_NaN();
  }
  return sol;
}

PursuitSolution solve_pursuit(const PursuitProblem& pr, const PursuitOptions& opt) {
  pr.validate();
  int evaluations = 0;
  auto evaluate = [&](double t1) {
    ++evaluations;
    PursuitSolution s = solve_at(pr, t1, opt);
    const double phi = signed_capture(pr, s.terminal.Y);
    return std::pair<PursuitSolution, double>(std::move(s), phi);
  };
  auto captured = [](const PursuitSolution& s, double phi) {
    return std::abs(phi) <= 1e-14 * std::max(1.0, s.terminal.Y.norm());
  };
  auto finish = [&](PursuitSolution s) {
    s.outer_iterations = evaluations;
    s.converged = s.converged && s.residuals.max() < 1e-6;
    return s;
  };

  auto [lo_sol, f_lo] = evaluate(pr.t_lo);
  if (captured(lo_sol, f_lo)) return finish(std::move(lo_sol));
  const double f_first = f_lo;

  // Coarse scan for the first sign change.
  const int scan = std::max(1, opt.scan_points);
  double a = pr.t_lo, fa = f_lo;
  std::optional<std::pair<PursuitSolution, double>> hit;
  double b = a, fb = fa;
  for (int k = 1; k <= scan; ++k) {
    const double t = k == scan ? pr.t_hi : pr.t_lo + (pr.t_hi - pr.t_lo) * k / scan;
    auto res = evaluate(t);
    if (captured(res.first, res.second)) return finish(std::move(res.first));
    if ((res.second > 0) != (fa > 0)) {
      b = t;
      fb = res.second;
      hit = std::move(res);
      break;
    }
    a = t;
    fa = res.second;
    if (k == scan) {
      std::ostringstream msg;
      msg << "capture value keeps its sign on [" << pr.t_lo << ", " << pr.t_hi
          << "]: sign at t_lo " << sign_name(f_first) << " (" << f_first << "), sign at t_hi "
          << sign_name(fa) << " (" << fa << ")";
      throw Error(ErrorCode::kCaptureNotBracketed, msg.str());
    }
  }

  // Illinois false position on [a, b].
  PursuitSolution best = std::move(hit->first);
  double f_best = fb;
  for (int k = 0; k < opt.max_outer; ++k) {
    if (std::abs(b - a) <= opt.t1_tol * std::max(1.0, std::abs(b))) break;
    double c = (a * fb - b * fa) / (fb - fa);
    if (!(c > std::min(a, b) && c < std::max(a, b))) c = 0.5 * (a + b);
    auto [sol, fc] = evaluate(c);
    if (std::abs(fc) < std::abs(f_best)) {
      best = std::move(sol);
      f_best = fc;
    }
    if (fc == 0.0 || captured(best, f_best)) break;
    if ((fc > 0) != (fb > 0)) {
      a = b;
      fa = fb;
    } else {
      fa *= 0.5;
    }
    b = c;
    fb = fc;
  }
  return finish(std::move(best));
}

}  // namespace vgame
