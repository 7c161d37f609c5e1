#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vgame/grid.hpp"

namespace vgame {

/// Linear pursuit-evasion game with free terminal time t1:
///
///   y(t) = y0(t) + ∫_{t0}^{t}[A y + B u + C v]ds
///   J    = ½Yᵀ M0 Y + ½∫[yᵀM1y + uᵀQu + vᵀRv]dt,     Y = y(t1)
///
/// and the game stops at capture, ½YᵀMY = 0. For every candidate t1 the grid
/// is [t0, t1] with `nodes` points, so the node count stays fixed while the
/// spacing follows t1. Kernels must be analytic (the terminal velocity uses
/// their time derivatives); y0 is a p×1 arity-1 kernel.
struct PursuitProblem {
  double t0 = 0.0;
  std::size_t nodes = 129;
  QuadratureRule rule = QuadratureRule::kTrapezoid;
  KernelSpec y0;
  KernelSpec A, B, C;
  Eigen::MatrixXd M, M0, M1, Q, R;
  double t_lo = 0.0;
  double t_hi = 0.0;

  Eigen::Index p() const { return M.rows(); }
  Eigen::Index m() const { return Q.rows(); }
  Eigen::Index n() const { return R.rows(); }

  /// Shapes, symmetry, M ⪰ 0, Q ≻ 0, R ≺ 0, analytic kernels, t0 < t_lo < t_hi.
  void validate() const;
  TimeGrid grid_for(double t1) const;
};

/// M^{1/2} by symmetric eigendecomposition. Eigenvalues below −1e-12·max(1, ‖M‖)
/// raise InvariantViolated; the rest are clamped at zero.
Eigen::MatrixXd capture_root(const Eigen::MatrixXd& M);

/// ½YᵀMY.
double capture_residual(const PursuitProblem& problem, const Eigen::VectorXd& Y);

/// eᵀM^{1/2}Y with e the leading eigenvector of M (sign fixed so its largest
/// entry is positive). Changes sign across a capture when M has rank one.
double signed_capture(const PursuitProblem& problem, const Eigen::VectorXd& Y);

/// Terminal quantities Y = y(t1), U = u(t1), V = v(t1), W = ẏ(t1) and the
/// multipliers Ψ (stored as a column) and ω.
struct TerminalState {
  double t1 = 0.0;
  Eigen::VectorXd Y, U, V, W;
  Eigen::VectorXd psi_cap;
  double omega = 0.0;
};

/// Closed form Ψ = −(YᵀMW)⁻¹[YᵀM0W + ½(YᵀM1Y + UᵀQU + VᵀRV)]·Yᵀ(M + M0), read
/// literally. TransversalityViolated when YᵀMW is negligible against |MY||W|.
Eigen::VectorXd big_psi(const PursuitProblem& problem, const TerminalState& terminal);

/// Which expression supplies Ψ inside the solver.
///  - kClosedForm: the closed form above;
///  - kElimination: ω from the Eulerian derivative, Ψ = ωYᵀM + YᵀM0.
/// The two agree when M0 = 0 and differ by (ω − 1)YᵀM0 otherwise.
enum class MultiplierRule { kClosedForm, kElimination };

std::string_view to_string(MultiplierRule rule);
MultiplierRule parse_multiplier_rule(std::string_view name);

/// Ψ and ω by `rule`, with the common factor mᵀY cancelled when M = μmmᵀ has
/// rank one, so the value stays finite at capture. A vanishing bracket
/// [YᵀM0W + G] gives Ψ = 0 even when the Eulerian derivative vanishes too.
std::pair<Eigen::VectorXd, double> capture_multipliers(const PursuitProblem& problem,
                                                       const Eigen::VectorXd& Y,
                                                       const Eigen::VectorXd& U,
                                                       const Eigen::VectorXd& V,
                                                       const Eigen::VectorXd& W,
                                                       MultiplierRule rule);

/// Terminal data of a general free-time game at t1: gradients ∇_Y F, ∇_Y Φ,
/// explicit t1-derivatives F_t1, Φ_t1, the running cost G(t1, Y, U, V) and W.
struct GeneralTerminalData {
  Eigen::VectorXd grad_F;
  Eigen::VectorXd grad_Phi;
  double F_t1 = 0.0;
  double Phi_t1 = 0.0;
  double G = 0.0;
  Eigen::VectorXd W;
};

struct Multipliers {
  double omega = 0.0;
  Eigen::VectorXd psi_cap;
};

/// ω = −[∇F·W + F_t1 + G] / (∇Φ·W + Φ_t1), Ψ = ω∇Φ + ∇F.
/// TransversalityViolated when the Eulerian derivative ∇Φ·W + Φ_t1 vanishes
/// relative to |∇Φ||W| + |Φ_t1|.
Multipliers eliminate_multipliers(const GeneralTerminalData& data);

/// The general terminal data of this game: F = ½YᵀM0Y, Φ = ½YᵀMY, no
/// explicit t1 dependence.
GeneralTerminalData terminal_data(const PursuitProblem& problem,
                                  const Eigen::VectorXd& Y, const Eigen::VectorXd& U,
                                  const Eigen::VectorXd& V, const Eigen::VectorXd& W);

/// Model functions of a general free-time game.
struct GeneralPursuitModel {
  using Terminal = std::function<double(double t1, const Eigen::VectorXd& Y,
                                        const Eigen::VectorXd& U,
                                        const Eigen::VectorXd& V)>;
  using Running = std::function<double(double t, const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& u,
                                       const Eigen::VectorXd& v)>;
  using Dynamics = std::function<Eigen::VectorXd(
      double t, double s, const Eigen::VectorXd& y, const Eigen::VectorXd& u,
      const Eigen::VectorXd& v)>;

  Terminal F;
  Running G;
  Terminal Phi;
  Dynamics f;
};

GeneralPursuitModel general_model(const PursuitProblem& problem);

/// F + G + ωΦ + Ψf(t1, t, y, u, v) + ∫ₜ^{t1} ψ(s) f(s, t, y, u, v) ds on a grid
/// ending at t1; t must be a node.
double general_hamiltonian(const GeneralPursuitModel& model, const TimeGrid& grid,
                           double t, const Eigen::VectorXd& y, const Eigen::VectorXd& u,
                           const Eigen::VectorXd& v, const Eigen::VectorXd& Y,
                           const Eigen::VectorXd& U, const Eigen::VectorXd& V,
                           const NodeVectors& psi, const Eigen::VectorXd& psi_cap,
                           double omega);

/// Kernels of the problem tabulated on one grid.
struct PursuitKernels {
  Kernel2 A, B, C;
  NodeVectors y0;
};

PursuitKernels tabulate(const PursuitProblem& problem, const TimeGrid& grid);

/// ψ(t) = yᵀ(t)M1 + ΨA(t1, t) + ∫ₜ^{t1} ψ(s)A(s, t)ds by backward substitution
/// (composite-rule tail weights). The grid must end at t1.
NodeVectors costate_solve(const PursuitProblem& problem, const TimeGrid& grid,
                          double t1, const Eigen::VectorXd& psi_cap,
                          const NodeVectors& y);

/// Same equation through the backward resolvent representation.
NodeVectors costate_by_resolvent(const PursuitProblem& problem, const TimeGrid& grid,
                                 const Eigen::VectorXd& psi_cap, const NodeVectors& y);

/// uᵀ = −[∫ₜ^{t1}ψB + ΨB(t1, t)]Q⁻¹ and vᵀ likewise with C and R.
std::pair<NodeVectors, NodeVectors> controls_from_costate(const PursuitProblem& problem,
                                                          const TimeGrid& grid,
                                                          const NodeVectors& psi,
                                                          const Eigen::VectorXd& psi_cap);

/// The costate equation with the state eliminated through y = y1 + ∫B1u + ∫C1v
/// and the control laws: one dense linear solve over the grid.
NodeVectors coupled_costate_solve(const PursuitProblem& problem, const TimeGrid& grid,
                                  double t1, const Eigen::VectorXd& psi_cap);

/// ẏ(t1) = ẏ0(t1) + A(t1,t1)Y + B(t1,t1)U + C(t1,t1)V
///         + ∫[A_t(t1,s)y + B_t(t1,s)u + C_t(t1,s)v]ds.
Eigen::VectorXd terminal_velocity(const PursuitProblem& problem, const TimeGrid& grid,
                                  const NodeVectors& y, const NodeVectors& u,
                                  const NodeVectors& v);

/// One pass at a frozen Ψ: costate, controls, trajectory, terminal values.
/// Affine in Ψ.
struct InnerPass {
  NodeVectors psi, u, v, y;
  Eigen::VectorXd Y, U, V, W;
};

InnerPass inner_pass(const PursuitProblem& problem, const TimeGrid& grid,
                     const Eigen::VectorXd& psi_cap);

/// Defects of the terminal system U = −Q⁻¹B(t1,t1)ᵀΨ, V = −R⁻¹C(t1,t1)ᵀΨ,
/// Y = y1(t1) + ∫[B1u + C1v], W = ẏ(t1) (max-abs entries).
struct TerminalResiduals {
  double u = 0.0;
  double v = 0.0;
  double y = 0.0;
  double w = 0.0;
};

TerminalResiduals terminal_residuals(const PursuitProblem& problem, const TimeGrid& grid,
                                     const TerminalState& terminal, const NodeVectors& u,
                                     const NodeVectors& v, const NodeVectors& y);

/// Necessary-conditions residual table, recomputed from problem data.
struct PursuitResiduals {
  double capture = 0.0;              // |M^{1/2}Y| / max(1, |Y|)
  double terminal_u = 0.0;
  double terminal_v = 0.0;
  double terminal_y = 0.0;
  double terminal_w = 0.0;
  double state = 0.0;                // state equation at every node
  double costate = 0.0;              // costate equation at every node
  double stationarity = 0.0;         // control laws at every node
  double multiplier = 0.0;           // Ψ against the selected rule
  double variational_capture = 0.0;  // ΨW + ωΦ_t1 + F_t1 + G

  std::vector<std::pair<std::string, double>> named() const;
  double max() const;
};

struct PursuitOptions {
  double damping = 0.5;
  double tol = 1e-8;
  int max_iter = 100;
  /// Root tolerance on t1.
  double t1_tol = 1e-13;
  int max_outer = 200;
  /// Coarse scan points used to locate the first sign change.
  int scan_points = 8;
  MultiplierRule rule = MultiplierRule::kClosedForm;
};

PursuitResiduals pursuit_residuals(const PursuitProblem& problem, const TimeGrid& grid,
                                   const TerminalState& terminal, const NodeVectors& psi,
                                   const NodeVectors& u, const NodeVectors& v,
                                   const NodeVectors& y,
                                   MultiplierRule rule = MultiplierRule::kClosedForm);

struct PursuitSolution {
  TimeGrid grid;
  TerminalState terminal;
  NodeVectors psi, u_star, v_star, y_star;
  PursuitResiduals residuals;
  /// |Ψ(closed form) − Ψ(elimination)| at the terminal state.
  double elimination_gap = 0.0;
  bool converged = false;
  int inner_iterations = 0;
  int outer_iterations = 0;
};

/// Damped fixed point on (Y, U, V, W) at a fixed t1, starting from the
/// control-free trajectory with Ψ = 0. InnerNoConvergence on failure.
PursuitSolution solve_at(const PursuitProblem& problem, double t1,
                         const PursuitOptions& options = {});

/// Outer root find on t1 over signed_capture of the inner solution: a coarse
/// scan of [t_lo, t_hi] for the first sign change, then Illinois false
/// position. Returns t_lo when it already captures. CaptureNotBracketed names
/// the endpoint signs when no change is found.
PursuitSolution solve_pursuit(const PursuitProblem& problem,
                              const PursuitOptions& options = {});

}  // namespace vgame
