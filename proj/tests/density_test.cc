//
// Copyright 2026 The Cactus Mechanism Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "cactus/density.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "absl/status/status.h"
#include "cactus/cost.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "oracles.h"
#include "status_matchers.h"

namespace cactus {
namespace {

using ::cactus::testing::StatusIs;
using ::testing::DoubleNear;
using ::testing::HasSubstr;
using ::testing::IsEmpty;

constexpr double kInf = std::numeric_limits<double>::infinity();

// n=1, N=2, r=1/2: 0.4 + 2(0.2) + 2(0.05)/(1/2) = 1.
CactusDensity SmallDensity() {
  return *CactusDensity::Create({1, 2, 0.5}, {0.4, 0.2, 0.05});
}

CactusDensity RandomDensity(std::mt19937_64& rng, const CactusShape& shape) {
  return *CactusDensity::Create(shape,
                                oracle::RandomWeights(rng, shape.N, shape.r));
}

TEST(ShapeTest, RejectsInvalidShapes) {
  EXPECT_OK(ValidateShape({1, 2, 0.5}));
  EXPECT_THAT(ValidateShape({0, 2, 0.5}),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("n")));
  EXPECT_THAT(ValidateShape({3, 3, 0.5}),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("N")));
  EXPECT_THAT(ValidateShape({1, 2, 1.0}),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("r")));
  EXPECT_THAT(ValidateShape({1, 2, 0.0}),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("r")));
}

TEST(CellIndexTest, FollowsBoundaryConvention) {
  EXPECT_EQ(CellIndexOf(2, 0.0), 0);
  EXPECT_EQ(CellIndexOf(2, 0.25), 0);
  EXPECT_EQ(CellIndexOf(2, -0.25), 0);
  EXPECT_EQ(CellIndexOf(2, 0.26), 1);
  EXPECT_EQ(CellIndexOf(2, 0.75), 1);
  EXPECT_EQ(CellIndexOf(2, 0.76), 2);
  EXPECT_EQ(CellIndexOf(2, -0.75), -1);
  EXPECT_EQ(CellIndexOf(2, -0.76), -2);
}

TEST(CreateTest, ValidatesWeights) {
  EXPECT_THAT(CactusDensity::Create({1, 2, 0.5}, {0.4, 0.2}),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("N+1")));
  EXPECT_THAT(CactusDensity::Create({1, 2, 0.5}, {0.5, 0.2, -0.0})
                  .status()
                  .code(),
              absl::StatusCode::kInvalidArgument);
  EXPECT_THAT(CactusDensity::Create({1, 2, 0.5}, {0.6, -0.05, 0.1}),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("p")));
  EXPECT_THAT(CactusDensity::Create({1, 2, 0.5}, {0.4, 0.2, 0.06}),
              StatusIs(absl::StatusCode::kInvalidArgument,
                       HasSubstr("normaliz")));
}

TEST(CreateTest, CreateNormalizedRescales) {
  ASSERT_OK_AND_ASSIGN(CactusDensity d, CactusDensity::CreateNormalized(
                                            {1, 2, 0.5}, {0.8, 0.4, 0.1}));
  const std::vector<double> p(d.weights().begin(), d.weights().end());
  EXPECT_THAT(p, ::testing::ElementsAre(DoubleNear(0.4, 1e-16),
                                        DoubleNear(0.2, 1e-16),
                                        DoubleNear(0.05, 1e-17)));
}

TEST(ExtendedWeightTest, AppliesGeometricRuleAndSymmetry) {
  const CactusDensity d = SmallDensity();
  EXPECT_DOUBLE_EQ(d.ExtendedWeight(3), 0.025);
  EXPECT_DOUBLE_EQ(d.ExtendedWeight(5), 0.05 * 0.125);
  for (int k = 0; k < 8; ++k) {
    EXPECT_EQ(d.ExtendedWeight(-k), d.ExtendedWeight(k));
  }
  EXPECT_EQ(d.ExtendedWeight(2), 0.05);
}

TEST(PdfTest, CenterAndFirstTailCell) {
  ASSERT_OK_AND_ASSIGN(CactusDensity d, GaussianInit({4, 16, 0.8}, 1.0));
  const auto p = d.weights();
  EXPECT_DOUBLE_EQ(d.Pdf(0.0), 4 * p[0]);
  EXPECT_DOUBLE_EQ(d.Pdf(17.0 / 4), 4 * p[16] * 0.8);
}

TEST(PdfTest, IsEven) {
  std::mt19937_64 rng(7);
  const CactusDensity d = RandomDensity(rng, {3, 12, 0.7});
  std::uniform_real_distribution<double> x_dist(-8.0, 8.0);
  for (int j = 0; j < 10000; ++j) {
    const double x = x_dist(rng);
    EXPECT_EQ(d.Pdf(x), d.Pdf(-x)) << "x=" << x;
  }
}

TEST(PdfTest, GeometricTailLaw) {
  std::mt19937_64 rng(11);
  const CactusShape shape{3, 12, 0.7};
  const CactusDensity d = RandomDensity(rng, shape);
  for (int first = shape.N + 1; first < shape.N + 10; ++first) {
    for (int k = 1; k < 6; ++k) {
      const double ratio =
          d.Pdf(static_cast<double>(first + k) / shape.n) /
          d.Pdf(static_cast<double>(first) / shape.n);
      EXPECT_NEAR(ratio, std::pow(shape.r, k), 1e-14);
    }
  }
}

TEST(PdfTest, IntegratesToOne) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const CactusDensity d = RandomDensity(rng, {2, 10, 0.6});
    EXPECT_NEAR(NormalizationSum(d.weights(), d.shape().r), 1.0, 1e-12);
    EXPECT_NEAR(oracle::QuadratureAgainstDensity(
                    d, [](double) { return 1.0; }),
                1.0, 1e-12);
  }
}

TEST(CdfTest, LimitsAndSymmetry) {
  const CactusDensity d = SmallDensity();
  EXPECT_EQ(d.Cdf(-kInf), 0.0);
  EXPECT_EQ(d.Cdf(kInf), 1.0);
  EXPECT_DOUBLE_EQ(d.Cdf(0.0), 0.5);
  // Boundary (N - 1/2)/n: everything but the tail cells.
  EXPECT_NEAR(d.Cdf(1.5), 1.0 - 0.05 / 0.5, 1e-15);
  for (int j = -6; j <= 6; ++j) {
    const double x = j + 0.5;
    EXPECT_NEAR(d.Cdf(-x), 1.0 - d.Cdf(x), 1e-15);
  }
}

TEST(CdfTest, MatchesQuadratureOnRandomIntervals) {
  std::mt19937_64 rng(5);
  const CactusDensity d = RandomDensity(rng, {3, 9, 0.8});
  std::uniform_real_distribution<double> x_dist(-6.0, 6.0);
  for (int j = 0; j < 50; ++j) {
    double a = x_dist(rng);
    double b = x_dist(rng);
    if (a > b) std::swap(a, b);
    EXPECT_NEAR(d.Cdf(b) - d.Cdf(a), oracle::QuadratureMass(d, a, b), 1e-10)
        << "[" << a << ", " << b << "]";
  }
}

TEST(CdfTest, IsMonotone) {
  std::mt19937_64 rng(9);
  const CactusDensity d = RandomDensity(rng, {2, 6, 0.5});
  double previous = 0.0;
  for (double x = -10.0; x <= 10.0; x += 0.01) {
    const double value = d.Cdf(x);
    EXPECT_GE(value, previous);
    previous = value;
  }
}

TEST(SampleTest, EmptyAndDeterministic) {
  const CactusDensity d = SmallDensity();
  EXPECT_THAT(d.Sample(1, 0), IsEmpty());
  EXPECT_EQ(d.Sample(42, 100), d.Sample(42, 100));
  EXPECT_NE(d.Sample(42, 100), d.Sample(43, 100));
}

TEST(SampleTest, KolmogorovSmirnov) {
  std::mt19937_64 rng(13);
  const CactusDensity d = RandomDensity(rng, {4, 12, 0.75});
  const int count = 100000;
  const double statistic = oracle::KsStatistic(
      d.Sample(2024, count), [&](double x) { return d.Cdf(x); });
  EXPECT_LT(statistic * std::sqrt(count),
            oracle::KolmogorovCriticalValue(0.001));
}

TEST(SampleTest, MomentsAtOneMillion) {
  ASSERT_OK_AND_ASSIGN(CactusDensity d, GaussianInit({10, 80, 0.9}, 1.0));
  const std::vector<double> samples = d.Sample(77, 1000000);
  double sum = 0.0, sum_sq = 0.0, sum_4 = 0.0;
  for (double x : samples) {
    sum += x;
    sum_sq += x * x;
    sum_4 += x * x * x * x;
  }
  const double m = samples.size();
  const double mean = sum / m;
  const double second = sum_sq / m;
  const double sd = std::sqrt(second - mean * mean);
  EXPECT_LT(std::abs(mean), 4.0 * sd / 1000.0);
  ASSERT_OK_AND_ASSIGN(double cost,
                       ExpectedCost(d, CostModel::Quadratic(1.0)));
  const double se = std::sqrt((sum_4 / m - second * second) / m);
  EXPECT_LT(std::abs(second - cost), 4.0 * se);
}

TEST(GaussianInitTest, ValidDensity) {
  ASSERT_OK_AND_ASSIGN(CactusDensity d, GaussianInit({100, 800, 0.95}, 0.6));
  EXPECT_NEAR(NormalizationSum(d.weights(), 0.95), 1.0, 1e-12);
  EXPECT_TRUE(d.IsStrictlyPositive());
  const auto p = d.weights();
  EXPECT_EQ(*std::max_element(p.begin(), p.end()), p[0]);
  ASSERT_OK_AND_ASSIGN(double cost,
                       ExpectedCost(d, CostModel::Quadratic(1.0)));
  EXPECT_NEAR(cost, 0.36, 0.05 * 0.36);
}

TEST(GaussianInitTest, RejectsNonPositiveSigma) {
  EXPECT_THAT(GaussianInit({2, 4, 0.5}, 0.0),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("sigma")));
  EXPECT_THAT(GaussianInit({2, 4, 0.5}, -1.0).status().code(),
              absl::StatusCode::kInvalidArgument);
}

}  // namespace
}  // namespace cactus
