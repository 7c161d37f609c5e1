#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "support.hpp"
#include "vgame/grid.hpp"

namespace vgame {
namespace {

std::vector<double> sample(const TimeGrid& g, double (*f)(double)) {
  std::vector<double> out;
  for (double t : g.nodes()) out.push_back(f(t));
  return out;
}

TEST(Grid, TrapezoidThreeNodes) {
  const auto g = make_grid(0, 1, 3);
  EXPECT_EQ(g.nodes(), (std::vector<double>{0, 0.5, 1}));
  EXPECT_EQ(g.weights(), (std::vector<double>{0.25, 0.5, 0.25}));
}

TEST(Grid, SinglePanel) {
  const auto g = make_grid(0, 2, 2);
  EXPECT_EQ(g.weights(), (std::vector<double>{1, 1}));
}

TEST(Grid, RejectsBadInput) {
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kMissingArtifact;
  };
  EXPECT_EQ(code([] { make_grid(0, 1, 1); }), ErrorCode::kTooFewNodes);
  EXPECT_EQ(code([] { make_grid(1, 1, 5); }), ErrorCode::kInvalidInterval);
  EXPECT_EQ(code([] { make_grid(2, 1, 5); }), ErrorCode::kInvalidInterval);
  EXPECT_EQ(code([] { make_grid(0, 1, 4, QuadratureRule::kSimpson); }),
            ErrorCode::kInvalidQuadrature);
}

TEST(Grid, InvariantsHold) {
  for (auto rule : {QuadratureRule::kTrapezoid, QuadratureRule::kSimpson}) {
    for (std::size_t n : {3u, 5u, 17u, 129u}) {
      const auto g = make_grid(-0.3, 2.1, n, rule);
      EXPECT_EQ(g.nodes().front(), -0.3);
      EXPECT_EQ(g.nodes().back(), 2.1);
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_GE(g.weight(i), 0.0);
        if (i) EXPECT_GT(g.node(i), g.node(i - 1));
        sum += g.weight(i);
      }
      EXPECT_NEAR(sum, 2.4, 2.4e-12);
    }
  }
}

TEST(Grid, IntegratesPolynomialsExactly) {
  const auto tz = make_grid(0, 1, 3);
  EXPECT_DOUBLE_EQ(integrate1(tz, sample(tz, [](double) { return 1.0; })), 1.0);
  EXPECT_DOUBLE_EQ(integrate1(tz, sample(tz, [](double t) { return t; })), 0.5);
  EXPECT_DOUBLE_EQ(integrate1(tz, sample(tz, [](double t) { return t * t; })), 0.375);
  for (std::size_t n : {3u, 5u, 9u}) {
    const auto s = make_grid(0, 1, n, QuadratureRule::kSimpson);
    EXPECT_NEAR(integrate1(s, sample(s, [](double t) { return t * t * t - t; })), -0.25, 1e-15);
  }
}

TEST(Grid, SegmentWeightsIntegrateCubicsUnderSimpson) {
  const auto g = make_grid(0, 1, 17, QuadratureRule::kSimpson);
  for (std::size_t lo = 0; lo < 8; ++lo) {
    for (std::size_t hi = lo + 2; hi < g.size(); ++hi) {
      const auto w = g.segment_weights(lo, hi);
      double s = 0.0;
      for (std::size_t k = lo; k <= hi; ++k) s += w[k - lo] * std::pow(g.node(k), 3);
      EXPECT_NEAR(s, (std::pow(g.node(hi), 4) - std::pow(g.node(lo), 4)) / 4, 1e-14);
    }
  }
}

TEST(Grid, RefinementConvergesAtRuleOrder) {
  auto f = [](double t) { return std::exp(t) * std::sin(2 * t); };
  for (auto [rule, ratio] : {std::pair{QuadratureRule::kTrapezoid, 4.0},
                             std::pair{QuadratureRule::kSimpson, 16.0}}) {
    double prev = 0.0;
    double prev_gap = 0.0;
    for (std::size_t n : {9u, 17u, 33u, 65u}) {
      const auto g = make_grid(0, 1, n, rule);
      const double v = integrate1(g, sample(g, +f));
      if (prev != 0.0) {
        const double gap = std::abs(v - prev);
        if (prev_gap > 0.0) EXPECT_NEAR(prev_gap / gap, ratio, 0.15 * ratio);
        prev_gap = gap;
      }
      prev = v;
    }
  }
}

TEST(Grid, LengthMismatch) {
  const auto g = make_grid(0, 1, 5);
  const std::vector<double> f(4, 1.0);
  EXPECT_THROW(integrate1(g, f), Error);
}

TEST(Grid, DoubleIntegralOfSeparableFunction) {
  const auto g = make_grid(0, 1, 9, QuadratureRule::kSimpson);
  std::vector<double> f;
  for (double x : g.nodes())
    for (double y : g.nodes()) f.push_back(x * x * y);
  EXPECT_NEAR(integrate2(g, f), 1.0 / 6.0, 1e-15);
}

TEST(Kernels, MaterializeFamilies) {
  const auto g = make_grid(0, 1, 3);
  const auto c = materialize1(KernelSpec::constant(Eigen::MatrixXd::Constant(1, 1, 2)), g);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(c.at(i)(0, 0), 2.0);
  const auto e = materialize2(KernelSpec::exponential(Eigen::MatrixXd::Ones(1, 1),
                                                      Eigen::MatrixXd::Zero(1, 1)), g);
  for (const auto& v : e.values()) EXPECT_EQ(v(0, 0), 1.0);
  const auto ex = materialize2(KernelSpec::exponential(Eigen::MatrixXd::Constant(1, 1, 2),
                                                       Eigen::MatrixXd::Constant(1, 1, -1)), g);
  EXPECT_DOUBLE_EQ(ex.at(2, 0)(0, 0), 2 * std::exp(-1.0));
  const auto poly = KernelSpec::polynomial({{1, 0, Eigen::MatrixXd::Ones(1, 1)},
                                            {0, 2, Eigen::MatrixXd::Constant(1, 1, 3)}});
  EXPECT_DOUBLE_EQ(materialize2(poly, g).at(1, 2)(0, 0), 0.5 + 3.0);
  EXPECT_DOUBLE_EQ(poly.dt(0.4, 0.9)(0, 0), 1.0);
}

TEST(Kernels, TableSizeMismatch) {
  const auto g = make_grid(0, 1, 3);
  const auto spec = KernelSpec::from_table({Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)});
  try {
    materialize1(spec, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kGridMismatch);
  }
}

TEST(Kernels, TableRoundTripIsBitExact) {
  std::mt19937_64 rng(3);
  const auto g = make_grid(0, 1, 7);
  const auto K1 = testing_support::smooth_kernel1(g, 2, 3, rng);
  const auto K2 = testing_support::smooth_kernel2(g, 2, 2, rng);
  EXPECT_TRUE(materialize1(to_table_spec(K1), g) == K1);
  EXPECT_TRUE(materialize2(to_table_spec(K2), g) == K2);
  const auto spec = KernelSpec::exponential(testing_support::random_matrix(2, 2, rng),
                                            testing_support::random_matrix(2, 2, rng));
  const auto M = materialize2(spec, g);
  EXPECT_TRUE(materialize2(to_table_spec(M), g) == M);
}

TEST(Kernels, AdjointSwapsAndTransposes) {
  std::mt19937_64 rng(9);
  const auto g = make_grid(0, 1, 4);
  const auto K = testing_support::smooth_kernel2(g, 2, 3, rng);
  const auto Kt = K.adjoint();
  EXPECT_EQ(Kt.rows(), 3);
  EXPECT_TRUE(Kt.at(1, 3) == K.at(3, 1).transpose());
}

}  // namespace
}  // namespace vgame
