#pragma once

#include <Eigen/Dense>

#include "vgame/grid.hpp"

namespace vgame {

/// Two discretizations of the resolvent kernel.
///
/// kContinuous builds S row by row from S(t, s) = A(t, s) + ∫ₛᵗ S(t, σ)A(σ, s)dσ
/// with the composite rule on [s, t], so that identity holds exactly on the
/// grid. kDiscrete divides the entries of (I − Ω_A)⁻¹Ω_A by the forward
/// weights, which makes y0 + ∫S y0 reproduce the Nyström state solve exactly.
/// Both converge to the same kernel at the rule's order.
enum class ResolventFlavor { kContinuous, kDiscrete };

/// Weight tables for tail integrals ∫ₜ^{t1}.
///  - kQuadrature: the composite rule on [t_i, t1];
///  - kAdjoint: the transpose of the forward rule under the grid inner
///    product, so backward solves are exact discrete adjoints.
enum class TailWeights { kQuadrature, kAdjoint };

const Eigen::MatrixXd& tail_weights(const TimeGrid& grid, TailWeights kind);

/// Dense block matrix of u ↦ Σ_j table(i, j) K(t_i, t_j) u_j (node-major
/// stacking). With the forward table this is the Nyström form of ∫_{t0}^{t}.
Eigen::MatrixXd volterra_operator(const Kernel2& K, const Eigen::MatrixXd& table);
Eigen::MatrixXd volterra_operator(const Kernel2& K, const TimeGrid& grid);

/// y_i = f_i + Σ_{j≤i} table(i, j) A_ij y_j for a lower-triangular table.
NodeVectors solve_volterra(const NodeVectors& forcing, const Kernel2& A,
                           const Eigen::MatrixXd& table);

/// y = y0 + ∫_{t0}^{t}[A y + B u + C v].
NodeVectors solve_volterra_linear(const NodeVectors& y0, const Kernel2& A,
                                  const Kernel2& B, const Kernel2& C,
                                  const NodeVectors& u, const NodeVectors& v,
                                  const TimeGrid& grid);

Kernel2 resolvent(const Kernel2& A, const TimeGrid& grid,
                  ResolventFlavor flavor = ResolventFlavor::kContinuous);

/// Control-explicit state representation y = y1 + ∫B1 u + ∫C1 v.
/// `state_from_u` and `state_from_v` are the same maps as dense matrices
/// acting on stacked controls.
struct ResolventTransform {
  TimeGrid grid;
  NodeVectors y1;
  Kernel2 B1, C1, S;
  Eigen::MatrixXd state_from_u;
  Eigen::MatrixXd state_from_v;
};

ResolventTransform transform(const NodeVectors& y0, const Kernel2& A,
                             const Kernel2& B, const Kernel2& C,
                             const TimeGrid& grid);

NodeVectors apply(const ResolventTransform& tr, const NodeVectors& u,
                  const NodeVectors& v);

/// Residual of S(t, s) − A(t, s) − ∫ₛᵗ S(t, σ)A(σ, s)dσ, max over node pairs.
double resolvent_identity_residual(const Kernel2& S, const Kernel2& A,
                                   const TimeGrid& grid);

/// Solves ψ(t) = φ(t) + ∫ₜ^{t1} ψ(s)A(s, t)ds. Row covectors are carried as
/// column vectors (ψᵀ), so the sum reads ψ_i = φ_i + Σ_k w_ik A(s_k, t_i)ᵀ ψ_k.
NodeVectors solve_backward(const NodeVectors& forcing, const Kernel2& A,
                           const TimeGrid& grid,
                           TailWeights weights = TailWeights::kQuadrature);

/// Σ(s, t), stored at (s, t), with ψ(t) = φ(t) + ∫ₜ^{t1} φ(s)Σ(s, t)ds
/// reproducing solve_backward under the same weights.
Kernel2 backward_resolvent(const Kernel2& A, const TimeGrid& grid,
                           TailWeights weights = TailWeights::kQuadrature);

NodeVectors apply_backward_resolvent(const NodeVectors& forcing,
                                     const Kernel2& sigma, const TimeGrid& grid,
                                     TailWeights weights = TailWeights::kQuadrature);

}  // namespace vgame
