#include <bbmb/flux.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace bbmb;

namespace {

// plain bisection on f'(u) - v, the oracle for inv_lambda
double bisect_speed(const FluxModel& f, double v, double lo, double hi) {
  for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f.eval(mid, 1) < v ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace

TEST(FluxEval, BurgersValues) {
  const auto f = FluxModel::burgers();
  EXPECT_DOUBLE_EQ(flux_eval(f, 0.3, 1), 0.3);
  EXPECT_DOUBLE_EQ(flux_eval(f, 7.0, 2), 1.0);
  EXPECT_DOUBLE_EQ(flux_eval(f, 2.0, 0), 2.0);
  EXPECT_EQ(flux_eval(f, 2.0, 3), 0.0);
}

TEST(FluxEval, QuarticValues) {
  const auto f = FluxModel::quartic();
  EXPECT_DOUBLE_EQ(flux_eval(f, 1.0, 1), 2.0);
  EXPECT_DOUBLE_EQ(flux_eval(f, 1.0, 0), 0.75);
  EXPECT_DOUBLE_EQ(flux_eval(f, 2.0, 2), 13.0);
  EXPECT_DOUBLE_EQ(flux_eval(f, 2.0, 3), 12.0);
  EXPECT_DOUBLE_EQ(flux_eval(f, -3.0, 4), 6.0);
  EXPECT_EQ(flux_eval(f, 5.0, 5), 0.0);
}

TEST(FluxEval, CustomPolynomialDerivatives) {
  // f = 1 + 2u + 3u^2 + 4u^3 + 5u^4 + 6u^5
  const auto f = FluxModel::custom({1, 2, 3, 4, 5, 6});
  const double u = 0.7;
  EXPECT_NEAR(f.eval(u, 5), 720.0, 1e-12);
  EXPECT_NEAR(f.eval(u, 4), 120.0 + 720.0 * u, 1e-12);
  EXPECT_NEAR(f.eval(u, 1), 2 + 6 * u + 12 * u * u + 20 * u * u * u + 30 * std::pow(u, 4), 1e-12);
}

TEST(FluxEval, RejectsUnsupportedOrder) {
  const auto f = FluxModel::burgers();
  EXPECT_THROW(f.eval(0.0, 6), ContractViolation);
  EXPECT_THROW(f.eval(0.0, -1), ContractViolation);
}

TEST(FluxModel, EmptyCustomIsZeroFlux) {
  const auto f = FluxModel::custom({});
  for (int k = 0; k <= 5; ++k) EXPECT_EQ(f.eval(0.3, k), 0.0);
}

TEST(FluxModel, ConvexityCheck) {
  EXPECT_NO_THROW(FluxModel::burgers().require_convex(-1.4, 1.4));
  EXPECT_NO_THROW(FluxModel::quartic().require_convex(-1.4, 1.4));
  EXPECT_THROW(FluxModel::custom({0, 0, 0, 1}).require_convex(-1.0, 1.0), InvariantViolation);
}

TEST(InvLambda, BurgersIdentity) {
  EXPECT_NEAR(inv_lambda(FluxModel::burgers(), 0.25, {-1.0, 1.0}), 0.25, 1e-14);
}

TEST(InvLambda, QuarticExactRoot) {
  EXPECT_NEAR(inv_lambda(FluxModel::quartic(), 2.0, {-1.0, 2.0}), 1.0, 1e-14);
}

TEST(InvLambda, QuarticAgainstBisection) {
  const auto f = FluxModel::quartic();
  const double u = inv_lambda(f, 0.7, {-1.0, 2.0});
  EXPECT_NEAR(u, bisect_speed(f, 0.7, -1.0, 2.0), 1e-14);
  EXPECT_LE(std::abs(u * u * u + u - 0.7), 1e-12);
}

TEST(InvLambda, OutOfRange) {
  EXPECT_THROW(inv_lambda(FluxModel::burgers(), 3.0, {-1.0, 1.0}), OutOfRangeError);
  EXPECT_THROW(inv_lambda(FluxModel::quartic(), -5.0, {-1.0, 1.0}), OutOfRangeError);
}

TEST(InvLambda, RoundTripOnWorkingInterval) {
  std::mt19937_64 rng(20240611);
  for (const auto& f : {FluxModel::burgers(), FluxModel::quartic(), FluxModel::custom({0, 0.1, 1.0, 0.2, 0.3})}) {
    const double lo = -0.4 - 1.0, hi = 0.4 + 1.0;
    std::uniform_real_distribution<double> pick(lo, hi);
    for (int i = 0; i < 500; ++i) {
      const double u = pick(rng);
      EXPECT_GT(f.eval(u, 2), 0.0);
      EXPECT_NEAR(inv_lambda(f, f.eval(u, 1), {lo, hi}), u, 10 * default_inv_lambda_tol);
    }
  }
}
