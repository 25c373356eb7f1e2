#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/constants/constants.hpp>

#include "mixts/bounds.hpp"
#include "mixts/errors.hpp"
#include "oracles.hpp"

namespace {

using mixts::BoundInputsLinear;
using mixts::BoundInputsMDP;
using oracle::Quad;
namespace bmp = boost::multiprecision;

double linear_oracle(const BoundInputsLinear& in, bool full) {
  const Quad n = in.n, d = in.d, L = in.num_latent, s = in.sigma, k = in.kappa, lam = in.lambda0_max;
  const Quad s2 = s * s, k2 = k * k;
  Quad b = 6 * s * d * bmp::sqrt(n * (1 + k2 * lam / s2) * bmp::log(1 + n * k2 * lam / (s2 * d)) * bmp::log(d * n)) +
           2 * s * bmp::sqrt(L * n * bmp::log(n));
  if (full) {
    b += 3 * L * bmp::sqrt(2 * k2 * lam * d * bmp::log(d * n)) +
         2 * bmp::sqrt(k2 * lam * d / (2 * boost::math::constants::pi<Quad>())) + 4 * L * k;
  }
  return static_cast<double>(b);
}

double mdp_oracle(const BoundInputsMDP& in) {
  const Quad n = in.n, X = in.num_states, A = in.num_actions, h = in.horizon, L = in.num_latent,
             lam = in.lambda0_min;
  const Quad b = 4 * X * h * bmp::sqrt(2 * A * n * h * bmp::log(4 * X * A * n) * bmp::log(1 + n * h / (2 * X * A * lam))) +
                 bmp::sqrt(L * n * h * bmp::log(n));
  return static_cast<double>(b);
}

TEST(Theorem1, HandComputedZeroLambda) {
  // With lam = 0 only the identification term survives: 2 * 0.1 * sqrt(10 * 1000 * log 1000).
  const BoundInputsLinear in{1000, 10, 10, 0.1, 1, 0.0};
  EXPECT_NEAR(mixts::theorem1_bound(in), 0.2 * std::sqrt(1e4 * std::log(1000.0)), 1e-12);
  EXPECT_NEAR(mixts::theorem1_bound(in, true), 0.2 * std::sqrt(1e4 * std::log(1000.0)) + 40.0, 1e-12);
}

TEST(Theorem1, MatchesQuadPrecisionOnGrid) {
  for (double n : {2.0, 100.0, 1e4, 1e6})
    for (double d : {1.0, 10.0, 50.0})
      for (double L : {1.0, 10.0})
        for (double sigma : {0.05, 1.0})
          for (double lam : {1e-4, 0.01, 1.0})
            for (bool full : {false, true}) {
              const BoundInputsLinear in{n, d, L, sigma, 1.5, lam};
              const double want = linear_oracle(in, full);
              EXPECT_NEAR(mixts::theorem1_bound(in, full), want, 1e-12 * want);
            }
}

TEST(Theorem1, IncreasingInPriorWidth) {
  double prev = 0.0;
  for (double s0 : {0.01, 0.05, 0.1, 0.2, 0.5}) {
    const double b = mixts::theorem1_bound({1000, 10, 10, 0.1, 1, s0 * s0});
    EXPECT_GT(b, prev);
    prev = b;
  }
}

TEST(Theorem1, DomainErrors) {
  EXPECT_THROW(mixts::theorem1_bound({1, 1, 1, 0.1, 1, 0.1}), mixts::DomainError);
  EXPECT_THROW(mixts::theorem1_bound({0.5, 10, 1, 0.1, 1, 0.1}), mixts::DomainError);
  EXPECT_THROW(mixts::theorem1_bound({100, 10, 1, 0.0, 1, 0.1}), mixts::DomainError);
  EXPECT_THROW(mixts::theorem1_bound({100, 10, 1, 0.1, 1, -0.1}), mixts::DomainError);
  EXPECT_THROW(mixts::theorem1_bound({INFINITY, 10, 1, 0.1, 1, 0.1}), mixts::DomainError);
}

TEST(Theorem2, MatchesQuadPrecision) {
  for (double n : {1.0, 50.0, 1e5})
    for (double X : {2.0, 10.0})
      for (double h : {1.0, 20.0})
        for (double lam : {0.01, 1.0, 10.0}) {
          const BoundInputsMDP in{n, X, 2, h, 2, lam};
          const double want = mdp_oracle(in);
          EXPECT_NEAR(mixts::theorem2_bound(in), want, 1e-12 * want);
        }
}

TEST(Theorem2, DomainErrors) {
  EXPECT_THROW(mixts::theorem2_bound({10, 2, 2, 5, 2, 0.0}), mixts::DomainError);
  EXPECT_THROW(mixts::theorem2_bound({0, 2, 2, 5, 2, 1.0}), mixts::DomainError);
  EXPECT_THROW(mixts::theorem2_bound({10, 2, 2, 0, 2, 1.0}), mixts::DomainError);
}

}  // namespace
