#include "trustctl/controller.hpp"

#include <gtest/gtest.h>

#include <array>
#include <memory>

namespace trustctl {
namespace {

LinearSystemModel scalar_model(double a, double b) {
  return LinearSystemModel(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b), Matrix::Identity(1, 1),
                           Matrix::Identity(1, 1), Matrix::Identity(1, 1));
}

LqrConfig scalar_lqr(double q, double r, double beta = 1.0) {
  return LqrConfig{Matrix::Constant(1, 1, q), Matrix::Constant(1, 1, r), beta};
}

TEST(SolveDare, ScalarGoldenRatio) {
  // s = s - s^2/(s+1) + 1  =>  s^2 - s - 1 = 0.
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const auto model = scalar_model(1.0, 1.0);
  for (auto method : {DareMethod::kDoubling, DareMethod::kFixedPoint}) {
    DareOptions opt;
    opt.method = method;
    const auto sol = solve_dare(model, scalar_lqr(1.0, 1.0), opt);
    EXPECT_NEAR(sol.cost_to_go(0, 0), phi, 1e-10);
    EXPECT_NEAR(sol.gain(0, 0), phi / (phi + 1.0), 1e-10);
    EXPECT_NEAR(sol.gain(0, 0), 0.6180339887498949, 1e-10);
  }
}

TEST(SolveDare, ZeroInputReducesToLyapunov) {
  // B = 0: S = a^2 S + q  =>  S = q / (1 - a^2).
  const auto model = scalar_model(0.5, 0.0);
  const auto sol = solve_dare(model, scalar_lqr(1.0, 1.0));
  EXPECT_NEAR(sol.cost_to_go(0, 0), 4.0 / 3.0, 1e-12);
  EXPECT_NEAR(sol.gain(0, 0), 0.0, 1e-15);
}

TEST(SolveDare, ZeroDynamicsGivesStageCost) {
  Matrix q{{2.0, 0.5}, {0.5, 1.0}};
  LinearSystemModel model(Matrix::Zero(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                          Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  const auto sol = solve_dare(model, LqrConfig{q, Matrix::Identity(2, 2), 1.0});
  EXPECT_LT((sol.cost_to_go - q).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT(sol.gain.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SolveDare, DiscountMatchesScaledProblem) {
  const auto model = scalar_model(1.2, 1.0);
  const auto discounted = solve_dare(model, scalar_lqr(1.0, 1.0, 0.81));
  const auto scaled = solve_dare(scalar_model(1.2 * 0.9, 0.9), scalar_lqr(1.0, 1.0));
  EXPECT_NEAR(discounted.cost_to_go(0, 0), scaled.cost_to_go(0, 0), 1e-12);
}

TEST(SolveDare, CaseStudyConvergesAndStabilizes) {
  const auto model = build_case_study(power_grid_case_study());
  const auto sol = solve_dare(model, identity_lqr(7, 7));
  EXPECT_LT(sol.residual, 1e-8);
  EXPECT_LT(detail::spectral_radius(model.A() - model.B() * sol.gain), 1.0);
  EXPECT_TRUE(detail::is_symmetric(sol.cost_to_go));
  EXPECT_GT(detail::min_eigenvalue(sol.cost_to_go), 0.0);
}

TEST(SolveDare, DoublingAgreesWithFixedPointOnRandomStableSystems) {
  Rng rng(42);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 2 + trial % 3;
    Matrix a = Matrix::NullaryExpr(n, n, [&] { return coef(rng); });
    a *= 0.9 / std::max(1e-9, detail::spectral_radius(a));
    Matrix b = Matrix::NullaryExpr(n, 1, [&] { return coef(rng); });
    LinearSystemModel model(a, b, Matrix::Identity(n, n), Matrix::Identity(n, n), Matrix::Identity(n, n));
    DareOptions fixed;
    fixed.method = DareMethod::kFixedPoint;
    const auto s1 = solve_dare(model, identity_lqr(n, 1, 1.0));
    const auto s2 = solve_dare(model, identity_lqr(n, 1, 1.0), fixed);
    EXPECT_LT((s1.cost_to_go - s2.cost_to_go).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(SolveDare, RejectsBadCosts) {
  const auto model = scalar_model(1.0, 1.0);
  EXPECT_THROW(solve_dare(model, scalar_lqr(0.0, 1.0)), ValidationError);
  EXPECT_THROW(solve_dare(model, scalar_lqr(1.0, -1.0)), ValidationError);
  EXPECT_THROW(solve_dare(model, scalar_lqr(1.0, 1.0, 0.0)), ValidationError);
  EXPECT_THROW(solve_dare(model, scalar_lqr(1.0, 1.0, 1.5)), ValidationError);
  EXPECT_THROW(solve_dare(model, identity_lqr(2, 1)), ValidationError);
}

TEST(SolveDare, UnstabilizablePairIsReported) {
  const auto model = scalar_model(2.0, 0.0);
  EXPECT_THROW(solve_dare(model, scalar_lqr(1.0, 1.0)), NumericalError);
}

TEST(Act, AppliesNegativeGain) {
  LqrSolution sol;
  sol.gain = Matrix{{1.0, 2.0}};
  EXPECT_DOUBLE_EQ(act(sol, Vector{{1.0, 1.0}})(0), -3.0);
  EXPECT_DOUBLE_EQ(act(sol, Vector::Zero(2))(0), 0.0);
  EXPECT_THROW(act(sol, Vector::Zero(3)), ValidationError);
}

TEST(RunningCost, Examples) {
  const Vector x{{1.0, 1.0}};
  const auto cfg = LqrConfig{Matrix::Identity(2, 2), Matrix::Identity(1, 1), 1.0};
  EXPECT_DOUBLE_EQ(running_cost(x, Vector::Constant(1, 1.0), cfg, 0), 3.0);
  const auto cheap = LqrConfig{Matrix::Identity(2, 2), 0.01 * Matrix::Identity(1, 1), 1.0};
  EXPECT_DOUBLE_EQ(running_cost(x, Vector::Zero(1), cheap, 5), 2.0);
  EXPECT_NEAR(running_cost(x, Vector::Constant(1, 10.0), cheap, 0), 3.0, 1e-12);
  const auto discounted = LqrConfig{Matrix::Identity(2, 2), Matrix::Identity(1, 1), 0.5};
  EXPECT_DOUBLE_EQ(running_cost(x, Vector::Zero(1), discounted, 2), 0.5);
}

void expect_near(const Vector& a, const Vector& b) {
  ASSERT_EQ(a.size(), b.size());
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12) << a.transpose() << " vs " << b.transpose();
}

class WeightedEstimateTest : public ::testing::Test {
 protected:
  // Two sensors each seeing one state. After one update with y = (4, 2):
  // member 0 (sensor 1 only) has mean (0, 1); member 1 has mean (2, 0);
  // full filter has mean (2, 1).
  WeightedEstimateTest()
      : bank_(std::make_shared<const LinearSystemModel>(Matrix::Identity(2, 2), Matrix::Zero(2, 1),
                                                        Matrix::Identity(2, 2), Matrix::Zero(2, 2),
                                                        Matrix::Identity(2, 2)),
              1.0) {
    bank_.update(Vector{{4.0, 2.0}});
  }
  FilterBank bank_;
};

TEST_F(WeightedEstimateTest, MemberMeans) {
  expect_near(bank_.member(0).mean, (Vector{{0.0, 1.0}}));
  expect_near(bank_.member(1).mean, (Vector{{2.0, 0.0}}));
  expect_near(bank_.full().mean, (Vector{{2.0, 1.0}}));
}

TEST_F(WeightedEstimateTest, UniformWeightsAverageMembers) {
  const std::array<double, 2> pi{0.5, 0.5};
  const auto est = weighted_estimate(bank_, pi);
  ASSERT_TRUE(est);
  expect_near(*est, (Vector{{1.0, 0.5}}));
}

TEST_F(WeightedEstimateTest, OneHotSelectsMember) {
  const std::array<double, 2> pi{1.0, 0.0};
  expect_near(*weighted_estimate(bank_, pi), bank_.member(0).mean);
}

TEST_F(WeightedEstimateTest, UnequalWeights) {
  const std::array<double, 2> pi{0.25, 0.75};
  expect_near(*weighted_estimate(bank_, pi), (Vector{{1.5, 0.25}}));
}

TEST_F(WeightedEstimateTest, ScaleInvariant) {
  const std::array<double, 2> pi{0.1, 0.3};
  const std::array<double, 2> scaled{0.25, 0.75};
  EXPECT_LT((*weighted_estimate(bank_, pi) - *weighted_estimate(bank_, scaled)).norm(), 1e-15);
}

TEST_F(WeightedEstimateTest, AllZeroIsNullopt) {
  const std::array<double, 2> pi{0.0, 0.0};
  EXPECT_FALSE(weighted_estimate(bank_, pi));
  const auto with_full = weighted_estimate(bank_, pi, 0.5);
  ASSERT_TRUE(with_full);
  expect_near(*with_full, bank_.full().mean);
}

TEST_F(WeightedEstimateTest, RejectsBadWeights) {
  const std::array<double, 1> short_pi{1.0};
  const std::array<double, 2> negative{-0.1, 0.5};
  EXPECT_THROW(weighted_estimate(bank_, short_pi), ValidationError);
  EXPECT_THROW(weighted_estimate(bank_, negative), ValidationError);
}

// Closed-loop average cost under the LQR gain should not be beaten by nearby
// scalar gains, measured on common noise.
TEST(SolveDare, GainIsLocallyOptimalInSimulation) {
  const auto model = LinearSystemModel(Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0),
                                       Matrix::Identity(1, 1), Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  const auto cfg = scalar_lqr(1.0, 1.0);
  const double l_star = solve_dare(model, cfg).gain(0, 0);
  auto average = [&](double l, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> w(0.0, 1.0);
    double x = 0.0;
    double total = 0.0;
    const int slots = 200000;
    for (int t = 0; t < slots; ++t) {
      const double u = -l * x;
      total += x * x + u * u;
      x = x + u + w(rng);
    }
    return total / slots;
  };
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const double best = average(l_star, seed);
    EXPECT_LT(best, average(l_star - 0.05, seed));
    EXPECT_LT(best, average(l_star + 0.05, seed));
  }
}

}  // namespace
}  // namespace trustctl
