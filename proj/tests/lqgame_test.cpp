#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"
#include "vgame/lqgame.hpp"

namespace vgame {
namespace {

using testing_support::random_lq_problem;
using testing_support::random_vectors;

Eigen::MatrixXd s(double x) { return Eigen::MatrixXd::Constant(1, 1, x); }

LQGameProblem scalar_problem(const TimeGrid& g) {
  const std::size_t N = g.size();
  const auto z1 = Kernel1::constant(N, s(0));
  const auto z2 = Kernel2::constant(N, s(0));
  return LQGameProblem{g, zero_vectors(N, 1), z2, z2, z2, s(0), z1, z2, z1, z2, z1, z2};
}

double form_value(const BlockQuadraticForm& f, const NodeVectors& u, const NodeVectors& v) {
  return evaluate(f, {u, v});
}

TEST(EvaluateJ, Examples) {
  std::mt19937_64 rng(1);
  const auto g = make_grid(0, 1, 17);
  auto pr = random_lq_problem(g, 2, 1, 1, rng);
  pr.y0 = zero_vectors(17, 2);
  EXPECT_EQ(evaluate_J(pr, zero_vectors(17, 1), zero_vectors(17, 1)), 0.0);

  auto sc = scalar_problem(g);
  sc.Q1 = Kernel1::constant(17, s(2));
  EXPECT_NEAR(evaluate_J(sc, NodeVectors(17, Eigen::VectorXd::Ones(1)), zero_vectors(17, 1)), 1.0, 1e-14);
}

TEST(Assemble, VanishingStateCostLeavesControlKernels) {
  std::mt19937_64 rng(2);
  const auto g = make_grid(0, 1, 17);
  auto pr = random_lq_problem(g, 2, 2, 1, rng);
  pr.P0.setZero();
  pr.P1 = Kernel1::constant(17, Eigen::MatrixXd::Zero(2, 2));
  pr.P2 = Kernel2::constant(17, Eigen::MatrixXd::Zero(2, 2));
  const auto f = assemble_form(pr);
  EXPECT_TRUE(f.L11 == pr.Q2);
  EXPECT_TRUE(f.L22 == pr.R2);
  EXPECT_EQ(max_norm(f.q1) + max_norm(f.q2), 0.0);
  for (const auto& l : f.L12.values()) EXPECT_EQ(l.norm(), 0.0);
}

TEST(Assemble, NoMinimizerInputDecouplesIt) {
  std::mt19937_64 rng(3);
  const auto g = make_grid(0, 1, 17);
  auto pr = random_lq_problem(g, 2, 1, 2, rng);
  pr.B = Kernel2::constant(17, Eigen::MatrixXd::Zero(2, 1));
  const auto f = assemble_form(pr);
  EXPECT_EQ(max_norm(f.q1), 0.0);
  for (const auto& l : f.L12.values()) EXPECT_EQ(l.norm(), 0.0);
}

TEST(Assemble, FormPlusOffsetReproducesJ) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 3; ++trial) {
    const auto g = make_grid(0, 1.2, 65, trial == 1 ? QuadratureRule::kSimpson : QuadratureRule::kTrapezoid);
    const auto pr = random_lq_problem(g, 1 + trial % 2, 1 + (trial + 1) % 2, 2, rng);
    const auto f = assemble_form(pr);
    const double offset = evaluate_J(pr, zero_vectors(65, pr.m()), zero_vectors(65, pr.n()));
    for (int k = 0; k < 20; ++k) {
      const auto u = random_vectors(65, pr.m(), rng);
      const auto v = random_vectors(65, pr.n(), rng);
      const double J = evaluate_J(pr, u, v);
      EXPECT_NEAR(form_value(f, u, v) + offset, J, 1e-9 * std::max(1.0, std::abs(J)));
    }
  }
}

TEST(Assemble, AsymmetricCostIsDetected) {
  std::mt19937_64 rng(5);
  const auto g = make_grid(0, 1, 9);
  auto pr = random_lq_problem(g, 1, 1, 1, rng);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 9; ++j) pr.Q2.at(i, j) = s(g.node(i));
  try {
    assemble_form(pr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAsymmetryDetected);
  }
}

TEST(Coercivity, Examples) {
  const auto g = make_grid(0, 1, 33);
  auto c = coercivity_constants(Kernel1::constant(33, 2 * Eigen::MatrixXd::Identity(2, 2)),
                                Kernel2::constant(33, Eigen::MatrixXd::Zero(2, 2)), g);
  EXPECT_NEAR(c.single, 2.0, 1e-14);
  c = coercivity_constants(Kernel1::constant(33, s(0)), Kernel2::constant(33, s(0)), g);
  EXPECT_EQ(c.single + c.dbl + c.joint, 0.0);
  c = coercivity_constants(Kernel1::constant(33, s(1)), Kernel2::constant(33, s(-0.5)), g);
  EXPECT_NEAR(c.joint, 0.5, 1e-12);
  EXPECT_NEAR(c.raw_double, -0.5, 1e-12);
  EXPECT_EQ(c.dbl, 0.0);
}

TEST(Accretivity, ExamplesAndDuality) {
  const auto g = make_grid(0, 1, 17);
  auto b = accretivity_constants(Kernel1::constant(17, -3 * Eigen::MatrixXd::Identity(2, 2)),
                                 Kernel2::constant(17, Eigen::MatrixXd::Zero(2, 2)), g);
  EXPECT_NEAR(b.single, 3.0, 1e-14);
  b = accretivity_constants(Kernel1::constant(17, s(0)), Kernel2::constant(17, s(0)), g);
  EXPECT_EQ(b.single, 0.0);

  std::mt19937_64 rng(6);
  for (int k = 0; k < 5; ++k) {
    const auto K = testing_support::symmetric_kernel1(g, 2, rng);
    const auto L = testing_support::symmetric_kernel2(g, 2, rng);
    Kernel1 negK = K;
    for (std::size_t i = 0; i < 17; ++i) negK.at(i) = -K.at(i);
    const auto a = accretivity_constants(K, L, g);
    const auto c = coercivity_constants(negK, testing_support::negated(L), g);
    EXPECT_EQ(a.raw_joint, c.raw_joint);
    EXPECT_EQ(a.raw_single, c.raw_single);
  }
}

TEST(Coercivity, ShiftMonotonicity) {
  std::mt19937_64 rng(7);
  const auto g = make_grid(0, 1, 17);
  for (int k = 0; k < 5; ++k) {
    const auto pr = random_lq_problem(g, 2, 2, 2, rng);
    const auto f = assemble_form(pr);
    const auto a0 = coercivity_constants(f.K11, f.L11, g);
    const auto b0 = accretivity_constants(f.K22, f.L22, g);
    for (double tau : {0.1, 1.0}) {
      auto shifted = pr;
      for (std::size_t i = 0; i < 17; ++i) {
        shifted.Q1.at(i) += tau * Eigen::MatrixXd::Identity(2, 2);
        shifted.R1.at(i) -= tau * Eigen::MatrixXd::Identity(2, 2);
      }
      const auto fs = assemble_form(shifted);
      const auto a = coercivity_constants(fs.K11, fs.L11, g);
      const auto b = accretivity_constants(fs.K22, fs.L22, g);
      EXPECT_GE(a.joint, a0.joint);
      EXPECT_GE(b.joint, b0.joint);
      EXPECT_NEAR(a.raw_joint, a0.raw_joint + tau, 1e-10);
    }
  }
}

TEST(Assemble, NonnegativeStateCostGivesNonnegativeL11) {
  std::mt19937_64 rng(8);
  const auto g = make_grid(0, 1, 17);
  for (int k = 0; k < 5; ++k) {
    auto pr = random_lq_problem(g, 2, 2, 1, rng);
    pr.P0 = testing_support::psd_matrix(2, rng);
    for (std::size_t i = 0; i < 17; ++i) pr.P1.at(i) = testing_support::psd_matrix(2, rng);
    pr.P2 = testing_support::gram_kernel(g, 2, rng);
    pr.Q2 = Kernel2::constant(17, Eigen::MatrixXd::Zero(2, 2));
    const auto f = assemble_form(pr);
    EXPECT_TRUE(mercer_sample_check(f.L11, g, 100, static_cast<std::uint64_t>(k)));
  }
}

TEST(Solve, ZeroProblemHasZeroSaddle) {
  std::mt19937_64 rng(9);
  const auto g = make_grid(0, 1, 17);
  auto pr = random_lq_problem(g, 2, 1, 1, rng);
  pr.y0 = zero_vectors(17, 2);
  pr.P0.setZero();
  pr.P1 = Kernel1::constant(17, Eigen::MatrixXd::Zero(2, 2));
  pr.P2 = Kernel2::constant(17, Eigen::MatrixXd::Zero(2, 2));
  const auto sol = solve_lq_game(pr);
  EXPECT_EQ(max_norm(sol.u_star) + max_norm(sol.v_star), 0.0);
  EXPECT_EQ(sol.value, 0.0);
}

TEST(Solve, UnusedMinimizerStaysIdle) {
  std::mt19937_64 rng(10);
  const auto g = make_grid(0, 1, 17);
  auto pr = random_lq_problem(g, 2, 1, 1, rng);
  pr.B = Kernel2::constant(17, Eigen::MatrixXd::Zero(2, 1));
  pr.Q2 = Kernel2::constant(17, s(0));
  const auto sol = solve_lq_game(pr);
  EXPECT_LT(max_norm(sol.u_star), 1e-14);
}

TEST(Solve, SaddleInequalityOnJ) {
  std::mt19937_64 rng(11);
  const auto g = make_grid(0, 1, 65);
  for (int k = 0; k < 3; ++k) {
    const auto pr = random_lq_problem(g, 1 + k % 2, 1, 1 + k % 2, rng);
    const auto sol = solve_lq_game(pr);
    EXPECT_TRUE(sol.report.certified());
    const auto [r1, r2] = stationarity_residual(assemble_form(pr), {sol.u_star, sol.v_star});
    EXPECT_LT(std::max(max_norm(r1), max_norm(r2)), 1e-7);
    EXPECT_LT(max_abs_diff(sol.y_star, solve_state(pr, sol.u_star, sol.v_star)), 1e-15);
    for (int t = 0; t < 50; ++t) {
      auto u = sol.u_star;
      auto v = sol.v_star;
      const auto du = random_vectors(65, pr.m(), rng, 0.1);
      const auto dv = random_vectors(65, pr.n(), rng, 0.1);
      for (std::size_t i = 0; i < 65; ++i) {
        u[i] += du[i];
        v[i] += dv[i];
      }
      EXPECT_GE(evaluate_J(pr, u, sol.v_star), sol.value);
      EXPECT_LE(evaluate_J(pr, sol.u_star, v), sol.value);
    }
  }
}

}  // namespace
}  // namespace vgame
