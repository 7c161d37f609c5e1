#pragma once

#include <cstdint>
#include <limits>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vgame/grid.hpp"

namespace vgame {

/// Quadratic functional on discretized L²(t0, t1; Rᵐ × Rⁿ):
///
///   E(w1, w2) = ½∫ wᵀK w + ½∫∫ w(x)ᵀ L(x, y) w(y) + ∫ qᵀ w
///
/// K21 and L21 are never stored; they are K12ᵀ and L21(x, y) = L12(y, x)ᵀ.
struct BlockQuadraticForm {
  TimeGrid grid;
  Kernel1 K11, K22, K12;
  Kernel2 L11, L22, L12;
  NodeVectors q1, q2;

  Eigen::Index m() const { return K11.rows(); }
  Eigen::Index n() const { return K22.rows(); }
};

/// A form with all eight blocks given independently (no symmetry assumed).
struct RawBlockForm {
  TimeGrid grid;
  Kernel1 K11, K22, K12, K21;
  Kernel2 L11, L22, L12, L21;
  NodeVectors q1, q2;
};

struct ControlPair {
  NodeVectors w1;
  NodeVectors w2;
};

enum class DefinitenessMethod { kSpectral, kBlockM, kMercerSample };
enum class Sign { kPositive, kNegative };

std::string_view to_string(DefinitenessMethod method);

struct DefinitenessReport {
  bool jointly_pd_11 = false;
  bool jointly_nd_22 = false;
  double min_eig_11 = std::numeric_limits<double>::quiet_NaN();
  double max_eig_22 = std::numeric_limits<double>::quiet_NaN();
  DefinitenessMethod method = DefinitenessMethod::kSpectral;

  bool certified() const { return jointly_pd_11 && jointly_nd_22; }
};

/// Nodewise invertibility of K11, K22 and the full block K, by condition
/// number. Reported separately from joint definiteness.
struct InvertibilityReport {
  bool ok = true;
  double worst_condition = 1.0;
};

struct SaddleOptions {
  double definiteness_tol = 1e-9;
  double residual_tol = 1e-8;
  bool override_certification = false;
};

double evaluate(const BlockQuadraticForm& form, const ControlPair& w);
double evaluate(const RawBlockForm& form, const ControlPair& w);

/// K̃ij = ½(Kij + Kjiᵀ), L̃ij(x, y) = ½(Lij(x, y) + Lji(y, x)ᵀ).
BlockQuadraticForm symmetrize(const RawBlockForm& raw);
/// Re-symmetrizes the stored diagonal blocks of an already-packed form.
BlockQuadraticForm symmetrize(const BlockQuadraticForm& form);

/// Left-hand sides of the two stationarity (Fredholm) equations, nodewise.
std::pair<NodeVectors, NodeVectors> stationarity_residual(
    const BlockQuadraticForm& form, const ControlPair& w);

NodeVectors best_response_min(const BlockQuadraticForm& form,
                              const NodeVectors& w2,
                              const SaddleOptions& options = {});
NodeVectors best_response_max(const BlockQuadraticForm& form,
                              const NodeVectors& w1,
                              const SaddleOptions& options = {});

/// Solves the joint stationarity system by a dense pivoted LU.
ControlPair saddle_point(const BlockQuadraticForm& form,
                         const SaddleOptions& options = {});

/// Dense Nyström matrix of w ↦ K w + ∫ L w on the grid (node-major stacking).
Eigen::MatrixXd nystrom_matrix(const Kernel1& K, const Kernel2& L,
                               const TimeGrid& grid);

/// D + W^½ L W^½: symmetric, with eigenvalues equal to the discrete Rayleigh
/// quotients of ∫ wᵀK w + ∫∫ wᵀL w over ‖w‖²_L².
Eigen::MatrixXd symmetric_operator(const Kernel1& K, const Kernel2& L,
                                   const TimeGrid& grid);

DefinitenessReport check_joint_definiteness(const Kernel1& K, const Kernel2& L,
                                            const TimeGrid& grid, Sign sign,
                                            double tol = 1e-9);

DefinitenessReport certify(const BlockQuadraticForm& form, double tol = 1e-9);

InvertibilityReport check_pointwise_invertibility(
    const BlockQuadraticForm& form, double condition_bound = 1e12);

/// Smallest eigenvalue over all grid pairs of
/// M(x, y) = [[K(x)/|G|, L(x, y)], [L(x, y)ᵀ, K(y)/|G|]].
double block_M_min_eigenvalue(const Kernel1& K, const Kernel2& L,
                              const TimeGrid& grid);
bool block_M_condition(const Kernel1& K, const Kernel2& L, const TimeGrid& grid,
                       double tol = 1e-9);

/// Randomized falsifier for Σᵢⱼ aᵢᵀ L(xᵢ, xⱼ) aⱼ ≥ 0 over finite collections
/// of grid points. Each trial draws a random collection and tests it against
/// the worst vectors a (smallest eigenvalue of the sampled block matrix).
/// Returns false as soon as one collection is negative.
bool mercer_sample_check(const Kernel2& L, const TimeGrid& grid, int trials,
                         std::uint64_t seed, double tol = 1e-9);

struct SpectralBasis {
  TimeGrid grid;
  std::vector<NodeVectors> functions;
};

struct SpectralCheck {
  Eigen::MatrixXd lambda;
  double min_eigenvalue = 0.0;
  bool nonnegative = false;
};

/// Legendre polynomials of degree < `degrees` on each vector component,
/// re-orthonormalized under the grid inner product.
SpectralBasis legendre_basis(const TimeGrid& grid, Eigen::Index dim,
                             int degrees);

/// L(x, y) = Σ λ_kℓ ω_k(x) ω_ℓ(y)ᵀ.
Kernel2 synthesize_kernel(const SpectralBasis& basis,
                          const Eigen::MatrixXd& lambda);

/// λ_kℓ = ∫∫ ω_kᵀ L ω_ℓ and its smallest eigenvalue.
SpectralCheck spectral_definiteness(const Kernel2& L, const SpectralBasis& basis,
                                    double tol = 1e-9);

/// ∫∫ wᵀ L w under the grid's product quadrature.
double double_integral_form(const Kernel2& L, const NodeVectors& w,
                            const TimeGrid& grid);

/// Σ c_k ω_k.
NodeVectors expand(const SpectralBasis& basis, const Eigen::VectorXd& c);

}  // namespace vgame
