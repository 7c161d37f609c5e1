#pragma once

#include <Eigen/Dense>

#include "vgame/grid.hpp"
#include "vgame/quadform.hpp"

namespace vgame {

/// Linear-quadratic Volterra game
///
///   y(t) = y0(t) + ∫_{t0}^{t}[A y + B u + C v]
///   J    = ½yᵀ(t1)P0 y(t1) + ½∫[yᵀP1y + uᵀQ1u + vᵀR1v]
///        + ½∫∫[yᵀP2y + uᵀQ2u + vᵀR2v]
///
/// u minimizes, v maximizes.
struct LQGameProblem {
  TimeGrid grid;
  NodeVectors y0;
  Kernel2 A, B, C;
  Eigen::MatrixXd P0;
  Kernel1 P1;
  Kernel2 P2;
  Kernel1 Q1;
  Kernel2 Q2;
  Kernel1 R1;
  Kernel2 R2;

  Eigen::Index p() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  Eigen::Index n() const { return C.cols(); }

  /// Throws DimensionMismatch on inconsistent shapes.
  void validate() const;
};

struct LQSolution {
  NodeVectors u_star;
  NodeVectors v_star;
  NodeVectors y_star;
  double value = 0.0;
  DefinitenessReport report;
};

NodeVectors solve_state(const LQGameProblem& problem, const NodeVectors& u,
                        const NodeVectors& v);

double evaluate_J(const LQGameProblem& problem, const NodeVectors& u,
                  const NodeVectors& v);

/// Quadratic form in (u, v) with J(u, v) = E(u, v) + J(0, 0) on the grid.
/// K11 = Q1, K22 = R1, K12 = 0; the L blocks and q come from substituting
/// the resolvent representation of the state.
BlockQuadraticForm assemble_form(const LQGameProblem& problem);

/// Smallest eigenvalues of the discretized single-integral operator, the
/// double-integral operator and their sum, clamped at zero. The unclamped
/// values are kept alongside.
struct DefinitenessConstants {
  double single = 0.0;
  double dbl = 0.0;
  double joint = 0.0;
  double raw_single = 0.0;
  double raw_double = 0.0;
  double raw_joint = 0.0;
};

DefinitenessConstants coercivity_constants(const Kernel1& kernel1,
                                           const Kernel2& kernel2,
                                           const TimeGrid& grid);

/// Coercivity of the negated kernels: the largest β with the forms ≤ −β‖w‖².
DefinitenessConstants accretivity_constants(const Kernel1& kernel1,
                                            const Kernel2& kernel2,
                                            const TimeGrid& grid);

LQSolution solve_lq_game(const LQGameProblem& problem,
                         const SaddleOptions& options = {});

}  // namespace vgame
