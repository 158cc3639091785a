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

#include "cactus/cost.h"

#include <cmath>
#include <random>
#include <vector>

#include "absl/status/status.h"
#include "cactus/density.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "oracles.h"
#include "status_matchers.h"

namespace cactus {
namespace {

using ::cactus::testing::StatusIs;
using ::testing::HasSubstr;

TEST(CostModelTest, ParsesFamilies) {
  ASSERT_OK_AND_ASSIGN(CostFamily family, ParseCostFamily("power"));
  EXPECT_EQ(family, CostFamily::kPower);
  EXPECT_EQ(CostFamilyName(CostFamily::kQuadratic), "quadratic");
  EXPECT_THAT(ParseCostFamily("cubic"),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("cubic")));
}

TEST(CostModelTest, Validation) {
  EXPECT_OK(ValidateCostModel(CostModel::Quadratic(0.25)));
  EXPECT_THAT(ValidateCostModel(CostModel::Quadratic(0.0)),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("C")));
  EXPECT_THAT(ValidateCostModel(CostModel::Quadratic(1.0, -1.0)),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("s")));
  CostModel bad = CostModel::Quadratic(1.0);
  bad.alpha = 3.0;
  EXPECT_THAT(ValidateCostModel(bad),
              StatusIs(absl::StatusCode::kInvalidArgument,
                       HasSubstr("quadratic")));
}

TEST(NormalizeProblemTest, Examples) {
  const CostModel unit = CostModel::Quadratic(0.25);
  EXPECT_EQ(NormalizeProblem(unit), unit);

  const CostModel doubled = NormalizeProblem(CostModel::Quadratic(1.0, 2.0));
  EXPECT_EQ(doubled.family, CostFamily::kPower);
  EXPECT_EQ(doubled.alpha, 2.0);
  EXPECT_EQ(doubled.beta, 4.0);
  EXPECT_EQ(doubled.sensitivity, 1.0);
  EXPECT_EQ(doubled.budget, 1.0);

  const CostModel linear = NormalizeProblem(CostModel::Power(1.0, 3.0, 1.0, 0.5));
  EXPECT_DOUBLE_EQ(linear.beta, 1.5);
}

TEST(CellCostTest, ClosedForms) {
  const CactusShape shape{5, 20, 0.5};
  const CostModel quadratic = CostModel::Quadratic(1.0);
  EXPECT_NEAR(CellCost(quadratic, shape, 0), 1.0 / (12 * 25), 1e-17);
  for (int i = 1; i < 30; ++i) {
    EXPECT_NEAR(CellCost(quadratic, shape, i), (i * i + 1.0 / 12) / 25,
                1e-14 * i * i);
  }
  EXPECT_NEAR(CellCost(CostModel::Power(1.0, 1.0, 1.0), shape, 0), 1.0 / 20,
              1e-17);
}

TEST(CellCostTest, MatchesQuadratureAndIsMonotone) {
  for (double alpha : {0.5, 1.0, 1.7, 2.0, 3.0, 3.5, 4.0}) {
    const CostModel model = CostModel::Power(alpha, 1.3, 1.0, 0.8);
    const CactusShape shape{3, 10, 0.5};
    double previous = 0.0;
    for (int i = 0; i < 40; ++i) {
      const double value = CellCost(model, shape, i);
      EXPECT_NEAR(value, oracle::QuadratureCellCost(model, shape.n, i),
                  1e-12 * std::max(1.0, value))
          << "alpha=" << alpha << " i=" << i;
      EXPECT_GE(value, previous);
      EXPECT_EQ(value, CellCost(model, shape, -i));
      previous = value;
    }
  }
}

TEST(TailCostSumTest, MatchesSeries) {
  const CactusShape shape{1, 2, 0.5};
  const CostModel quadratic = CostModel::Quadratic(1.0);
  const double series = oracle::SeriesTailCost(quadratic, shape, 200);
  EXPECT_NEAR(TailCostSum(quadratic, shape), series, 1e-12 * series);

  for (double alpha : {0.7, 1.0, 2.5, 3.0, 4.0}) {
    const CostModel model = CostModel::Power(alpha, 2.0, 1.0);
    const CactusShape wide{4, 12, 0.9};
    const double expected = oracle::SeriesTailCost(model, wide, 1500);
    EXPECT_NEAR(TailCostSum(model, wide), expected, 1e-12 * expected)
        << "alpha=" << alpha;
  }
}

TEST(TailCostSumTest, SmallRatioLimit) {
  const CactusShape shape{2, 6, 1e-12};
  const CostModel model = CostModel::Quadratic(1.0);
  EXPECT_NEAR(TailCostSum(model, shape), CellCost(model, shape, 6), 1e-9);
}

TEST(TailCostSumTest, BelowAnalyticBound) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(unit(rng) * 50);
    const int N = n + 1 + static_cast<int>(unit(rng) * 8 * n);
    const double r = 0.05 + 0.94 * unit(rng);
    const double alpha = 0.5 + 3.5 * unit(rng);
    const CostModel model = CostModel::Power(alpha, 1.0, 1.0);
    const CactusShape shape{n, N, r};
    EXPECT_LE(TailCostSum(model, shape), TailCostBound(model, shape))
        << "n=" << n << " N=" << N << " r=" << r << " alpha=" << alpha;
  }
}

TEST(ExpectedCostTest, MatchesQuadrature) {
  std::mt19937_64 rng(19);
  for (const CostModel& model :
       {CostModel::Quadratic(1.0), CostModel::Power(1.0, 2.0, 1.0),
        CostModel::Power(2.5, 1.0, 1.0, 1.5)}) {
    const CactusShape shape{3, 15, 0.7};
    ASSERT_OK_AND_ASSIGN(CactusDensity d,
                         CactusDensity::Create(
                             shape, oracle::RandomWeights(rng, 15, 0.7)));
    ASSERT_OK_AND_ASSIGN(double cost, ExpectedCost(d, model));
    EXPECT_NEAR(cost, oracle::QuadratureExpectedCost(d, model), 1e-8);
  }
}

TEST(ExpectedCostTest, DegenerateCenterMass) {
  const CactusShape shape{4, 8, 0.5};
  std::vector<double> p(9, 0.0);
  p[0] = 1.0;
  ASSERT_OK_AND_ASSIGN(CactusDensity d, CactusDensity::Create(shape, p));
  const CostModel model = CostModel::Quadratic(1.0);
  ASSERT_OK_AND_ASSIGN(double cost, ExpectedCost(d, model));
  EXPECT_EQ(cost, CellCost(model, shape, 0));
}

TEST(ExpectedCostTest, ScalingConsistency) {
  ASSERT_OK_AND_ASSIGN(CactusDensity d, GaussianInit({5, 30, 0.8}, 1.0));
  const CostModel model = CostModel::Power(1.5, 0.7, 1.0, 2.5);
  ASSERT_OK_AND_ASSIGN(double direct, ExpectedCost(d, model));
  ASSERT_OK_AND_ASSIGN(double normalized,
                       ExpectedCost(d, NormalizeProblem(model)));
  EXPECT_NEAR(direct, normalized, 1e-13 * direct);
}

TEST(ExpectedCostTest, LinearInWeights) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const CactusShape shape{2, 9, 0.6};
  const CostModel model = CostModel::Quadratic(1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> p = oracle::RandomWeights(rng, 9, 0.6);
    const std::vector<double> q = oracle::RandomWeights(rng, 9, 0.6);
    const double t = unit(rng);
    std::vector<double> mix(10);
    for (int i = 0; i < 10; ++i) mix[i] = t * p[i] + (1 - t) * q[i];
    const double cp = *ExpectedCost(*CactusDensity::Create(shape, p), model);
    const double cq = *ExpectedCost(*CactusDensity::Create(shape, q), model);
    ASSERT_OK_AND_ASSIGN(CactusDensity dm,
                         CactusDensity::CreateNormalized(shape, mix));
    EXPECT_NEAR(*ExpectedCost(dm, model), t * cp + (1 - t) * cq, 1e-13);
  }
}

TEST(ExpectedCostTest, RejectsShapeMismatch) {
  ASSERT_OK_AND_ASSIGN(CactusDensity d, GaussianInit({2, 4, 0.5}, 1.0));
  ASSERT_OK_AND_ASSIGN(
      CellCostTable table,
      CellCostTable::Build(CostModel::Quadratic(1.0), {2, 5, 0.5}));
  EXPECT_THAT(ExpectedCost(d, table),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("shape")));
}

TEST(CellCostTableTest, Coefficients) {
  const CactusShape shape{2, 4, 0.5};
  ASSERT_OK_AND_ASSIGN(CellCostTable table,
                       CellCostTable::Build(CostModel::Quadratic(1.0), shape));
  const std::vector<double> a = table.Coefficients();
  ASSERT_EQ(a.size(), 5u);
  EXPECT_EQ(a[0], table.values()[0]);
  EXPECT_EQ(a[2], 2 * table.values()[2]);
  EXPECT_EQ(a[4], 2 * table.tail_sum());
}

}  // namespace
}  // namespace cactus
