#pragma once

#include <algorithm>
#include <functional>
#include <utility>

#include <Eigen/Dense>

#include "vgame/grid.hpp"
#include "vgame/volterra.hpp"

namespace vgame {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Game linear-quadratic in the controls, nonlinear in the state:
///
///   y(t) = y0(t) + ∫_{t0}^{t}[f0(t, s, y) + F1(t, s, y)u + F2(t, s, y)v]ds
///   J    = ∫[g0 + g1 u + g2 v + ½uᵀG11u + uᵀG12v + ½vᵀG22v]dt
///
/// g1 and g2 are returned as column vectors (g1ᵀ, g2ᵀ). The two gradient
/// callables are optional; when absent, central differences stand in and
/// `uses_finite_differences()` reports it.
struct LQCProblem {
  using KernelVector = std::function<Vec(double t, double s, const Vec& y)>;
  using KernelMatrix = std::function<Mat(double t, double s, const Vec& y)>;
  using Scalar = std::function<double(double t, const Vec& y)>;
  using Vector = std::function<Vec(double t, const Vec& y)>;
  using Matrix = std::function<Mat(double t, const Vec& y)>;
  /// ∇_y of the running cost at fixed (u, v).
  using CostGradient =
      std::function<Vec(double t, const Vec& y, const Vec& u, const Vec& v)>;
  /// ∂_y of f0 + F1u + F2v at fixed (u, v), a p×p matrix.
  using DynamicsJacobian = std::function<Mat(double t, double s, const Vec& y,
                                             const Vec& u, const Vec& v)>;

  explicit LQCProblem(TimeGrid g) : grid(std::move(g)) {}

  TimeGrid grid;
  NodeVectors y0;
  Eigen::Index p = 0, m = 0, n = 0;

  KernelVector f0;
  KernelMatrix F1, F2;
  Scalar g0;
  Vector g1, g2;
  Matrix G11, G12, G22;

  CostGradient cost_y;
  DynamicsJacobian dynamics_y;

  bool uses_finite_differences() const { return !cost_y || !dynamics_y; }
};

Vec dynamics(const LQCProblem& pr, double t, double s, const Vec& y, const Vec& u,
             const Vec& v);
double running_cost(const LQCProblem& pr, double t, const Vec& y, const Vec& u,
                    const Vec& v);
Vec running_cost_gradient(const LQCProblem& pr, double t, const Vec& y,
                          const Vec& u, const Vec& v);
Mat dynamics_jacobian(const LQCProblem& pr, double t, double s, const Vec& y,
                      const Vec& u, const Vec& v);

/// Tail integrals ∫ₜ^{t1} use the discrete-adjoint weights by default, which
/// makes the converged conditions the exact stationarity conditions of the
/// discretized game.
double hamiltonian(const LQCProblem& pr, double t, const Vec& y, const Vec& u,
                   const Vec& v, const NodeVectors& psi,
                   TailWeights weights = TailWeights::kAdjoint);

Vec control_u_given_v(const LQCProblem& pr, double t, const Vec& y, const Vec& v,
                      const NodeVectors& psi,
                      TailWeights weights = TailWeights::kAdjoint);
Vec control_v_lower(const LQCProblem& pr, double t, const Vec& y,
                    const NodeVectors& psi,
                    TailWeights weights = TailWeights::kAdjoint);
/// Built from the g5/F5 expansion, independently of control_u_given_v.
Vec control_u_lower(const LQCProblem& pr, double t, const Vec& y,
                    const NodeVectors& psi,
                    TailWeights weights = TailWeights::kAdjoint);

Vec control_v_given_u(const LQCProblem& pr, double t, const Vec& y, const Vec& u,
                      const NodeVectors& psi,
                      TailWeights weights = TailWeights::kAdjoint);
Vec control_u_upper(const LQCProblem& pr, double t, const Vec& y,
                    const NodeVectors& psi,
                    TailWeights weights = TailWeights::kAdjoint);
Vec control_v_upper(const LQCProblem& pr, double t, const Vec& y,
                    const NodeVectors& psi,
                    TailWeights weights = TailWeights::kAdjoint);

/// G22 − G21G11⁻¹G12.
Mat schur_g3(const LQCProblem& pr, double t, const Vec& y);

enum class GameSide { kLower, kUpper };

struct LQCOptions {
  double damping = 0.5;
  double tol = 1e-8;
  int max_iter = 200;
};

struct CostatePair {
  NodeVectors y;
  NodeVectors psi;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

struct LQCSolution {
  CostatePair pair;
  NodeVectors u;
  NodeVectors v;
  double value = 0.0;
};

/// Open-loop state solve.
NodeVectors solve_state(const LQCProblem& pr, const NodeVectors& u,
                        const NodeVectors& v);
/// ψ = ∇_y H with the controls held fixed: a linear backward equation.
NodeVectors solve_costate(const LQCProblem& pr, const NodeVectors& y,
                          const NodeVectors& u, const NodeVectors& v);
/// J at open-loop controls.
double evaluate_cost(const LQCProblem& pr, const NodeVectors& u,
                     const NodeVectors& v);
/// J along a known state.
double cost_along(const LQCProblem& pr, const NodeVectors& y,
                  const NodeVectors& u, const NodeVectors& v);

LQCSolution solve_game(const LQCProblem& pr, GameSide side,
                       const LQCOptions& options = {});
LQCSolution solve_lower_game(const LQCProblem& pr, const LQCOptions& options = {});
LQCSolution solve_upper_game(const LQCProblem& pr, const LQCOptions& options = {});

/// Defects of the state equation, the costate equation and the control
/// laws, recomputed from the model functions.
struct LQCResiduals {
  double state = 0.0;
  double costate = 0.0;
  double controls = 0.0;

  double max() const { return std::max({state, costate, controls}); }
};

LQCResiduals recheck(const LQCProblem& pr, GameSide side, const NodeVectors& y,
                     const NodeVectors& psi, const NodeVectors& u,
                     const NodeVectors& v);

}  // namespace vgame
