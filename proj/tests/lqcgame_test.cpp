#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"
#include "vgame/lqcgame.hpp"

namespace vgame {
namespace {

using testing_support::lq_as_lqc;
using testing_support::nonlinear_lqc;
using testing_support::random_matrix;
using testing_support::random_overlap_lq;
using testing_support::random_vectors;

// All model functions zero except the listed overrides.
LQCProblem zero_problem(const TimeGrid& g, Eigen::Index p, Eigen::Index m, Eigen::Index n) {
  LQCProblem q(g);
  q.y0 = zero_vectors(g.size(), p);
  q.p = p;
  q.m = m;
  q.n = n;
  q.f0 = [p](double, double, const Vec&) -> Vec { return Vec::Zero(p); };
  q.F1 = [p, m](double, double, const Vec&) -> Mat { return Mat::Zero(p, m); };
  q.F2 = [p, n](double, double, const Vec&) -> Mat { return Mat::Zero(p, n); };
  q.g0 = [](double, const Vec&) { return 0.0; };
  q.g1 = [m](double, const Vec&) -> Vec { return Vec::Zero(m); };
  q.g2 = [n](double, const Vec&) -> Vec { return Vec::Zero(n); };
  q.G11 = [m](double, const Vec&) -> Mat { return Mat::Identity(m, m); };
  q.G12 = [m, n](double, const Vec&) -> Mat { return Mat::Zero(m, n); };
  q.G22 = [n](double, const Vec&) -> Mat { return -Mat::Identity(n, n); };
  return q;
}

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-5) {
  Vec g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vec a = x, b = x;
    a(k) += h;
    b(k) -= h;
    g(k) = (f(a) - f(b)) / (2 * h);
  }
  return g;
}

TEST(Hamiltonian, Examples) {
  const auto g = make_grid(0, 1, 9);
  auto q = zero_problem(g, 2, 2, 1);
  q.g0 = [](double t, const Vec& y) { return t + y.sum(); };
  const Vec y = Vec::Constant(2, 0.3);
  EXPECT_DOUBLE_EQ(hamiltonian(q, g.node(3), y, Vec::Zero(2), Vec::Zero(1), zero_vectors(9, 2)),
                   g.node(3) + 0.6);
  q.g0 = [](double, const Vec&) { return 0.0; };
  const Vec u(Eigen::Vector2d(1.5, -2));
  EXPECT_DOUBLE_EQ(hamiltonian(q, g.node(3), y, u, Vec::Zero(1), zero_vectors(9, 2)), 0.5 * u.squaredNorm());
  EXPECT_THROW(hamiltonian(q, 0.05, y, u, Vec::Zero(1), zero_vectors(9, 2)), Error);
}

TEST(Hamiltonian, SecondDifferencesInUAreG11) {
  std::mt19937_64 rng(1);
  const auto g = make_grid(0, 1, 17);
  const auto q = nonlinear_lqc(g, 2, 2, 1, rng);
  const auto psi = random_vectors(17, 2, rng);
  const Vec y = random_matrix(2, 1, rng);
  const Vec u = random_matrix(2, 1, rng);
  const Vec v = random_matrix(1, 1, rng);
  const double t = g.node(5);
  const double h = 1e-3;
  const Mat G11 = q.G11(t, y);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      auto H = [&](double da, double db) {
        Vec w = u;
        w(a) += da;
        w(b) += db;
        return hamiltonian(q, t, y, w, v, psi);
      };
      const double d2 = (H(h, h) - H(h, -h) - H(-h, h) + H(-h, -h)) / (4 * h * h);
      EXPECT_NEAR(d2, G11(a, b), 1e-7);
    }
  }
}

TEST(Controls, Examples) {
  const auto g = make_grid(0, 1, 9);
  auto q = zero_problem(g, 2, 2, 2);
  const auto psi0 = zero_vectors(9, 2);
  const Vec y = Vec::Ones(2);
  const double t = g.node(2);
  EXPECT_EQ(control_u_given_v(q, t, y, Vec::Zero(2), psi0).norm(), 0.0);
  EXPECT_EQ(control_v_lower(q, t, y, psi0).norm(), 0.0);
  EXPECT_EQ(control_u_lower(q, t, y, psi0).norm(), 0.0);
  const Vec c(Eigen::Vector2d(0.7, -1.1));
  q.g1 = [c](double, const Vec&) -> Vec { return c; };
  EXPECT_LT((control_u_given_v(q, t, y, Vec::Zero(2), psi0) + c).norm(), 1e-15);
  q.g1 = [](double, const Vec&) -> Vec { return Vec::Zero(2); };
  q.g2 = [c](double, const Vec&) -> Vec { return c; };
  EXPECT_LT((control_v_lower(q, t, y, psi0) - c).norm(), 1e-15);
}

TEST(Controls, LawsAreStationaryPointsOfTheHamiltonian) {
  std::mt19937_64 rng(2);
  const auto g = make_grid(0, 1, 17, QuadratureRule::kSimpson);
  for (int trial = 0; trial < 5; ++trial) {
    const auto q = nonlinear_lqc(g, 2, 2, 2, rng);
    const auto psi = random_vectors(17, 2, rng);
    const Vec y = random_matrix(2, 1, rng);
    const double t = g.node(static_cast<std::size_t>(trial * 3));
    const Vec v = random_matrix(2, 1, rng);

    const Vec u_v = control_u_given_v(q, t, y, v, psi);
    const Vec grad_u = fd_gradient([&](const Vec& w) { return hamiltonian(q, t, y, w, v, psi); }, u_v);
    EXPECT_LT(grad_u.cwiseAbs().maxCoeff(), 1e-7);

    const Vec v_low = control_v_lower(q, t, y, psi);
    const Vec grad_v = fd_gradient(
        [&](const Vec& w) { return hamiltonian(q, t, y, control_u_given_v(q, t, y, w, psi), w, psi); },
        v_low);
    EXPECT_LT(grad_v.cwiseAbs().maxCoeff(), 1e-7);

    const Vec u_low = control_u_lower(q, t, y, psi);
    EXPECT_LT((u_low - control_u_given_v(q, t, y, v_low, psi)).cwiseAbs().maxCoeff(), 1e-10);

    const Vec u_up = control_u_upper(q, t, y, psi);
    EXPECT_LT((control_v_upper(q, t, y, psi) - control_v_given_u(q, t, y, u_up, psi)).norm(), 1e-10);
  }
}

TEST(Controls, SingularG11IsReported) {
  const auto g = make_grid(0, 1, 5);
  auto q = zero_problem(g, 1, 1, 1);
  q.G11 = [](double, const Vec&) -> Mat { return Mat::Zero(1, 1); };
  try {
    control_u_given_v(q, 0.5, Vec::Zero(1), Vec::Zero(1), zero_vectors(5, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingularG11);
  }
}

TEST(LQCSolve, ZeroProblemConvergesImmediately) {
  const auto g = make_grid(0, 1, 17);
  const auto q = zero_problem(g, 2, 1, 1);
  for (auto side : {GameSide::kLower, GameSide::kUpper}) {
    const auto sol = solve_game(q, side);
    EXPECT_EQ(sol.pair.iterations, 1);
    EXPECT_EQ(max_norm(sol.pair.y) + max_norm(sol.pair.psi) + max_norm(sol.u) + max_norm(sol.v), 0.0);
  }
}

TEST(LQCSolve, MatchesLQSaddleOnTheOverlap) {
  std::mt19937_64 rng(3);
  const auto g = make_grid(0, 1, 33);
  for (int trial = 0; trial < 3; ++trial) {
    const auto lq = random_overlap_lq(g, 1 + trial % 2, 1, 1 + (trial + 1) % 2, rng);
    const auto ref = solve_lq_game(lq);
    const auto q = lq_as_lqc(lq);
    for (auto side : {GameSide::kLower, GameSide::kUpper}) {
      const auto sol = solve_game(q, side);
      EXPECT_LT(max_abs_diff(sol.u, ref.u_star), 1e-6);
      EXPECT_LT(max_abs_diff(sol.v, ref.v_star), 1e-6);
      EXPECT_NEAR(sol.value, ref.value, 1e-6 * std::max(1.0, std::abs(ref.value)));
    }
  }
}

TEST(LQCSolve, NonlinearFixedPointPassesRecheck) {
  std::mt19937_64 rng(4);
  const auto g = make_grid(0, 1, 33);
  for (int trial = 0; trial < 3; ++trial) {
    const auto q = nonlinear_lqc(g, 2, 1, 2, rng);
    const auto low = solve_lower_game(q);
    const auto up = solve_upper_game(q);
    EXPECT_LT(recheck(q, GameSide::kLower, low.pair.y, low.pair.psi, low.u, low.v).max(), 1e-7);
    EXPECT_LT(recheck(q, GameSide::kUpper, up.pair.y, up.pair.psi, up.u, up.v).max(), 1e-7);
    EXPECT_LE(low.value, up.value + 1e-7);

    for (std::size_t i = 0; i < g.size(); ++i) {
      const double t = g.node(i);
      const Vec& y = low.pair.y[i];
      const Vec gu = fd_gradient([&](const Vec& w) { return hamiltonian(q, t, y, w, low.v[i], low.pair.psi); }, low.u[i]);
      const Vec gv = fd_gradient([&](const Vec& w) { return hamiltonian(q, t, y, low.u[i], w, low.pair.psi); }, low.v[i]);
      EXPECT_LT(std::max(gu.cwiseAbs().maxCoeff(), gv.cwiseAbs().maxCoeff()), 1e-6);

      const double g3 = Eigen::SelfAdjointEigenSolver<Mat>(schur_g3(q, t, y)).eigenvalues().maxCoeff();
      const double g22 = Eigen::SelfAdjointEigenSolver<Mat>(q.G22(t, y)).eigenvalues().maxCoeff();
      EXPECT_LE(g3, g22 + 1e-12);
    }
  }
}

TEST(LQCSolve, DampingDoesNotMoveTheFixedPoint) {
  std::mt19937_64 rng(5);
  const auto g = make_grid(0, 1, 33);
  const auto q = nonlinear_lqc(g, 2, 1, 1, rng);
  LQCOptions full;
  full.damping = 1.0;
  const auto a = solve_lower_game(q, full);
  const auto b = solve_lower_game(q);
  EXPECT_LT(max_abs_diff(a.u, b.u), 1e-7);
  EXPECT_LT(max_abs_diff(a.pair.psi, b.pair.psi), 1e-7);
}

TEST(LQCSolve, FiniteDifferenceFallbackAgreesWithAnalyticGradients) {
  std::mt19937_64 rng(6);
  std::mt19937_64 twin = rng;
  const auto g = make_grid(0, 1, 17);
  const auto analytic = nonlinear_lqc(g, 2, 1, 1, rng, true);
  const auto numeric = nonlinear_lqc(g, 2, 1, 1, twin, false);
  EXPECT_FALSE(analytic.uses_finite_differences());
  EXPECT_TRUE(numeric.uses_finite_differences());
  const auto a = solve_lower_game(analytic);
  const auto b = solve_lower_game(numeric);
  EXPECT_LT(max_abs_diff(a.pair.psi, b.pair.psi), 1e-6);
}

TEST(LQCSolve, NoConvergenceIsReported) {
  std::mt19937_64 rng(7);
  const auto g = make_grid(0, 1, 17);
  const auto q = nonlinear_lqc(g, 2, 1, 1, rng);
  LQCOptions tight;
  tight.max_iter = 2;
  try {
    solve_lower_game(q, tight);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoConvergence);
  }
}

TEST(Costate, MatchesFiniteDifferenceSensitivityOfCost) {
  std::mt19937_64 rng(8);
  const auto g = make_grid(0, 1, 33);
  auto q = nonlinear_lqc(g, 2, 1, 2, rng);
  const auto u = testing_support::smooth_vectors(g, 1, rng, 0.5);
  const auto v = testing_support::smooth_vectors(g, 2, rng, 0.5);
  const auto y = solve_state(q, u, v);
  const auto psi = solve_costate(q, y, u, v);
  const NodeVectors base = q.y0;
  for (int k = 0; k < 20; ++k) {
    const auto dir = random_vectors(g.size(), 2, rng);
    double analytic = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) analytic += g.weight(i) * psi[i].dot(dir[i]);
    const double h = 1e-5;
    auto shifted = [&](double e) {
      for (std::size_t i = 0; i < g.size(); ++i) q.y0[i] = base[i] + e * dir[i];
      return evaluate_cost(q, u, v);
    };
    const double fd = (shifted(h) - shifted(-h)) / (2 * h);
    EXPECT_NEAR(fd, analytic, 1e-4 * std::max(1.0, std::abs(analytic)));
  }
}

}  // namespace
}  // namespace vgame
