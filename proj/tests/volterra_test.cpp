#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"
#include "vgame/volterra.hpp"

namespace vgame {
namespace {

Kernel2 scalar_kernel(const TimeGrid& g, double a) {
  return Kernel2::constant(g.size(), Eigen::MatrixXd::Constant(1, 1, a));
}

double exp_kernel_error(const Kernel2& S, const TimeGrid& g, double a) {
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double exact = a * std::exp(a * (g.node(i) - g.node(j)));
      err = std::max(err, std::abs(S.at(i, j)(0, 0) - exact));
    }
  }
  return err;
}

TEST(Volterra, ZeroKernelsReturnForcing) {
  const auto g = make_grid(0, 1, 9);
  std::mt19937_64 rng(1);
  const auto y0 = testing_support::random_vectors(g.size(), 2, rng);
  const auto Z = Kernel2::constant(g.size(), Eigen::MatrixXd::Zero(2, 2));
  const auto Zu = Kernel2::constant(g.size(), Eigen::MatrixXd::Zero(2, 1));
  const auto u = testing_support::random_vectors(g.size(), 1, rng);
  EXPECT_EQ(max_abs_diff(solve_volterra_linear(y0, Z, Zu, Zu, u, u, g), y0), 0.0);
}

TEST(Volterra, ExponentialGrowthConvergesQuadratically) {
  double prev = 0.0;
  for (std::size_t n : {33u, 65u, 129u}) {
    const auto g = make_grid(0, 1, n);
    const auto A = scalar_kernel(g, 1.0);
    const auto Z = scalar_kernel(g, 0.0);
    const NodeVectors ones(n, Eigen::VectorXd::Ones(1));
    const auto y = solve_volterra_linear(ones, A, Z, Z, zero_vectors(n, 1),
                                         zero_vectors(n, 1), g);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(y[i](0) - std::exp(g.node(i))));
    if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.2);
    prev = err;
  }
}

TEST(Volterra, DirectIntegralOfControl) {
  const auto g = make_grid(0.5, 2, 7);
  const auto Z = scalar_kernel(g, 0.0);
  const auto One = scalar_kernel(g, 1.0);
  const NodeVectors ones(g.size(), Eigen::VectorXd::Ones(1));
  const auto y = solve_volterra_linear(zero_vectors(g.size(), 1), Z, One, Z, ones,
                                       zero_vectors(g.size(), 1), g);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(y[i](0), g.node(i) - 0.5, 1e-14);
}

TEST(Volterra, ScalarResolventMatchesNeumannSeries) {
  for (double a : {-1.0, 0.5, 2.0}) {
    double prev = 0.0;
    for (std::size_t n : {65u, 129u, 257u}) {
      const auto g = make_grid(0, 1, n);
      const double err = exp_kernel_error(resolvent(scalar_kernel(g, a), g), g, a);
      if (n == 129) EXPECT_LT(err, 1e-3);
      if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.3) << "a=" << a;
      prev = err;
    }
  }
}

TEST(Volterra, ZeroKernelHasZeroResolvent) {
  const auto g = make_grid(0, 1, 9);
  const auto S = resolvent(Kernel2::constant(g.size(), Eigen::MatrixXd::Zero(2, 2)), g);
  for (const auto& s : S.values()) EXPECT_EQ(s.norm(), 0.0);
}

TEST(Volterra, ResolventIdentityHoldsOnRandomKernels) {
  std::mt19937_64 rng(7);
  for (auto rule : {QuadratureRule::kTrapezoid, QuadratureRule::kSimpson}) {
    const auto g = make_grid(0, 1, 129, rule);
    const auto A = testing_support::smooth_kernel2(g, 2, 2, rng);
    const auto S = resolvent(A, g);
    EXPECT_LT(resolvent_identity_residual(S, A, g), 1e-8);
    const auto Sd = resolvent(A, g, ResolventFlavor::kDiscrete);
    // The discrete flavor is first order on the diagonal and first column;
    // under Simpson its rows oscillate with parity, so compare trapezoid only.
    if (rule == QuadratureRule::kSimpson) continue;
    double gap = 0.0;
    for (std::size_t i = 2; i < g.size(); ++i)
      for (std::size_t j = 1; j < i; ++j) gap = std::max(gap, (S.at(i, j) - Sd.at(i, j)).cwiseAbs().maxCoeff());
    EXPECT_LT(gap, 1e-3);
  }
}

TEST(Volterra, RepresentationMatchesDirectSolve) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const auto g = make_grid(0, 1.5, 65, trial % 2 ? QuadratureRule::kSimpson : QuadratureRule::kTrapezoid);
    const auto A = testing_support::smooth_kernel2(g, 2, 2, rng);
    const auto B = testing_support::smooth_kernel2(g, 2, 1, rng);
    const auto C = testing_support::smooth_kernel2(g, 2, 2, rng);
    const auto y0 = testing_support::random_vectors(g.size(), 2, rng);
    const auto u = testing_support::random_vectors(g.size(), 1, rng);
    const auto v = testing_support::random_vectors(g.size(), 2, rng);
    const auto tr = transform(y0, A, B, C, g);
    const auto direct = solve_volterra_linear(y0, A, B, C, u, v, g);
    EXPECT_LT(max_abs_diff(apply(tr, u, v), direct), 1e-7);
    const Eigen::VectorXd dense = stack(tr.y1) + tr.state_from_u * stack(u) + tr.state_from_v * stack(v);
    EXPECT_LT((dense - stack(direct)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Volterra, ZeroStateKernelLeavesInputKernels) {
  std::mt19937_64 rng(3);
  const auto g = make_grid(0, 1, 17);
  const auto Z = Kernel2::constant(g.size(), Eigen::MatrixXd::Zero(2, 2));
  const auto B = testing_support::smooth_kernel2(g, 2, 1, rng);
  const auto C = Kernel2::constant(g.size(), Eigen::MatrixXd::Zero(2, 1));
  const auto y0 = testing_support::random_vectors(g.size(), 2, rng);
  const auto tr = transform(y0, Z, B, C, g);
  EXPECT_LT(max_abs_diff(tr.y1, y0), 1e-15);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      EXPECT_LT((tr.B1.at(i, j) - B.at(i, j)).norm(), 1e-12);
      EXPECT_EQ(tr.C1.at(i, j).norm(), 0.0);
    }
  }
}

TEST(Volterra, CausalityKeepsPrefixBitIdentical) {
  std::mt19937_64 rng(5);
  const auto g = make_grid(0, 1, 33);
  const auto A = testing_support::smooth_kernel2(g, 2, 2, rng);
  const auto B = testing_support::smooth_kernel2(g, 2, 1, rng);
  const auto y0 = testing_support::random_vectors(g.size(), 2, rng);
  auto u = testing_support::random_vectors(g.size(), 1, rng);
  const auto base = solve_volterra_linear(y0, A, B, B, u, u, g);
  for (std::size_t i = 20; i < g.size(); ++i) u[i](0) += 1.0;
  const auto moved = solve_volterra_linear(y0, A, B, B, u, u, g);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ((base[i] - moved[i]).norm(), 0.0);
  EXPECT_GT((base[25] - moved[25]).norm(), 0.0);
}

TEST(Volterra, BackwardResolventReproducesBackwardSolve) {
  std::mt19937_64 rng(13);
  for (auto weights : {TailWeights::kQuadrature, TailWeights::kAdjoint}) {
    const auto g = make_grid(0, 1, 65, QuadratureRule::kSimpson);
    const auto A = testing_support::smooth_kernel2(g, 2, 2, rng);
    const auto phi = testing_support::random_vectors(g.size(), 2, rng);
    const auto direct = solve_backward(phi, A, g, weights);
    const auto sigma = backward_resolvent(A, g, weights);
    EXPECT_LT(max_abs_diff(apply_backward_resolvent(phi, sigma, g, weights), direct), 1e-8);
  }
}

TEST(Volterra, ScalarBackwardResolventIsTimeReversedExponential) {
  const double a = 0.7;
  const auto g = make_grid(0, 1, 129);
  const auto sigma = backward_resolvent(scalar_kernel(g, a), g);
  double interior = 0.0, edge = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    for (std::size_t i = 0; i <= k; ++i) {
      const double e = std::abs(sigma.at(k, i)(0, 0) - a * std::exp(a * (g.node(k) - g.node(i))));
      (i == k || k == g.size() - 1 ? edge : interior) = std::max(i == k || k == g.size() - 1 ? edge : interior, e);
    }
  }
  EXPECT_LT(interior, 1e-4);
  EXPECT_LT(edge, 1e-2);
}

TEST(Volterra, BackwardSolveOfConstantKernel) {
  // ψ' = −aψ backwards from ψ(t1) = 1 when φ ≡ 1: ψ(t) = e^{a(t1−t)}.
  const double a = 1.3;
  const auto g = make_grid(0, 1, 129);
  const NodeVectors ones(g.size(), Eigen::VectorXd::Ones(1));
  const auto psi = solve_backward(ones, scalar_kernel(g, a), g);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(psi[i](0), std::exp(a * (1.0 - g.node(i))), 1e-4);
}

TEST(Volterra, AdjointTailIsDiscreteTranspose) {
  // <ψ-solve, f> = <φ, y-solve> under the grid inner product.
  std::mt19937_64 rng(17);
  const auto g = make_grid(0, 2, 41, QuadratureRule::kSimpson);
  const auto A = testing_support::smooth_kernel2(g, 2, 2, rng);
  const auto f = testing_support::random_vectors(g.size(), 2, rng);
  const auto phi = testing_support::random_vectors(g.size(), 2, rng);
  const auto y = solve_volterra(f, A, g.forward_table());
  const auto psi = solve_backward(phi, A, g, TailWeights::kAdjoint);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    lhs += g.weight(i) * phi[i].dot(y[i]);
    rhs += g.weight(i) * psi[i].dot(f[i]);
  }
  EXPECT_NEAR(lhs, rhs, 1e-11 * (1.0 + std::abs(lhs)));
}

}  // namespace
}  // namespace vgame
