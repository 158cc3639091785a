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

#include "cactus/solver.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "absl/status/status.h"
#include "cactus/cost.h"
#include "cactus/density.h"
#include "cactus/divergence.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "oracles.h"
#include "status_matchers.h"

namespace cactus {
namespace {

using ::cactus::testing::StatusIs;
using ::testing::HasSubstr;

SynthesisProblem Problem(CactusShape shape, double budget) {
  return {shape, CostModel::Quadratic(budget)};
}

double Normalization(const std::vector<double>& p, double r) {
  return NormalizationSum(p, r);
}

TEST(ValidateTest, InfeasibleBudgetNamesCenterCell) {
  // c_{2,0} = 1/48.
  EXPECT_THAT(Synthesize(Problem({2, 4, 0.5}, 0.01)),
              StatusIs(absl::StatusCode::kFailedPrecondition,
                       HasSubstr("c_{n,0}")));
  EXPECT_OK(ValidateProblem(Problem({2, 4, 0.5}, 0.03)));
}

TEST(ValidateTest, Options) {
  SolverOptions options;
  options.smoothing_schedule = {1e-2, 1e-3, 1e-3};
  EXPECT_THAT(ValidateOptions(options),
              StatusIs(absl::StatusCode::kInvalidArgument,
                       HasSubstr("decreasing")));
  options = {};
  options.tolerance = 0.0;
  EXPECT_THAT(ValidateOptions(options).code(),
              absl::StatusCode::kInvalidArgument);
}

TEST(SynthesizeTest, TinyInstanceIsConsistent) {
  const SynthesisProblem problem = Problem({2, 4, 0.5}, 0.25);
  ASSERT_OK_AND_ASSIGN(SynthesisResult result, Synthesize(problem));
  EXPECT_TRUE(result.converged);
  const auto p = result.density.weights();
  EXPECT_NEAR(NormalizationSum(p, 0.5), 1.0, 1e-12);
  EXPECT_EQ(result.achieved_kl, *SupKl(result.density));
  EXPECT_LE(*ExpectedCost(result.density, problem.cost), 0.25 + 1e-8);
  ASSERT_EQ(result.certificate.size(), 2u);
  EXPECT_EQ(*std::max_element(result.certificate.begin(),
                              result.certificate.end()),
            result.achieved_kl);
  EXPECT_TRUE(result.density.IsStrictlyPositive());
}

TEST(SynthesizeTest, StageObjectivesNonincreasing) {
  ASSERT_OK_AND_ASSIGN(SynthesisResult result,
                       Synthesize(Problem({10, 80, 0.9}, 0.25)));
  ASSERT_GE(result.stage_objectives.size(), 2u);
  for (size_t j = 1; j < result.stage_objectives.size(); ++j) {
    EXPECT_LE(result.stage_objectives[j],
              result.stage_objectives[j - 1] + 1e-12);
  }
}

TEST(SynthesizeTest, BeatsGaussianAndIsDeterministic) {
  const SynthesisProblem problem = Problem({20, 160, 0.9}, 0.25);
  ASSERT_OK_AND_ASSIGN(SynthesisResult first, Synthesize(problem));
  ASSERT_OK_AND_ASSIGN(SynthesisResult second, Synthesize(problem));
  EXPECT_LT(first.achieved_kl, 2.0);
  EXPECT_EQ(first.achieved_kl, second.achieved_kl);
  EXPECT_TRUE(std::equal(first.density.weights().begin(),
                         first.density.weights().end(),
                         second.density.weights().begin()));
}

TEST(SynthesizeTest, BudgetMonotonicity) {
  const SolverOptions options;
  double previous = std::numeric_limits<double>::infinity();
  for (double budget : {0.1, 0.2, 0.4, 0.8}) {
    ASSERT_OK_AND_ASSIGN(SynthesisResult result,
                         Synthesize(Problem({5, 40, 0.8}, budget), options));
    EXPECT_LE(result.achieved_kl, previous + options.tolerance);
    previous = result.achieved_kl;
  }
}

TEST(SynthesizeTest, SensitivityScaling) {
  // Sensitivity 2 with quadratic cost equals unit sensitivity with cost 4x^2.
  SynthesisProblem scaled{{4, 20, 0.8}, CostModel::Quadratic(1.0, 2.0)};
  SynthesisProblem unit{{4, 20, 0.8}, CostModel::Power(2.0, 4.0, 1.0)};
  ASSERT_OK_AND_ASSIGN(SynthesisResult a, Synthesize(scaled));
  ASSERT_OK_AND_ASSIGN(SynthesisResult b, Synthesize(unit));
  EXPECT_NEAR(a.achieved_kl, b.achieved_kl, 1e-10);
}

TEST(SynthesizeTest, IterationLimitFlagsNonConvergence) {
  SolverOptions options;
  options.max_iterations = 3;
  ASSERT_OK_AND_ASSIGN(SynthesisResult result,
                       Synthesize(Problem({5, 40, 0.8}, 0.25), options));
  EXPECT_FALSE(result.converged);
  EXPECT_LE(result.iterations, 3);
  EXPECT_FALSE(result.warnings.empty());
}

TEST(ShiftObjectivesTest, MatchSeries) {
  std::mt19937_64 rng(31);
  const CactusShape shape{3, 9, 0.7};
  for (int trial = 0; trial < 5; ++trial) {
    const std::vector<double> p = oracle::RandomWeights(rng, 9, 0.7);
    ASSERT_OK_AND_ASSIGN(std::vector<double> values, ShiftObjectives(shape, p));
    const CactusDensity d = *CactusDensity::Create(shape, p);
    for (int k = 1; k <= 3; ++k) {
      EXPECT_NEAR(values[k - 1], oracle::SeriesBkSymmetric(d, k), 1e-12);
    }
  }
}

TEST(ShiftObjectivesTest, FlatCoreLeavesBoundaryAndTailTerms) {
  const int N = 6;
  const double r = 0.6;
  std::vector<double> p(N + 1, 1.0);
  p[N] = 0.5;
  const double L = -std::log(r);
  ASSERT_OK_AND_ASSIGN(std::vector<double> values,
                       ShiftObjectives({2, N, r}, p));
  for (int k = 1; k <= 2; ++k) {
    double expected = 0.0;
    for (int i = N - k; i < N; ++i) {
      const double v = p[N] * std::pow(r, i + k - N);
      expected += (1.0 - v) * std::log(1.0 / v);
    }
    expected += p[N] * (1 - std::pow(r, k)) / (1 - r) * k * L;
    EXPECT_NEAR(values[k - 1], expected, 1e-13);
  }
}

TEST(ShiftObjectivesTest, JointConvexity) {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const CactusShape shape{4, 12, 0.8};
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<double> p = oracle::RandomWeights(rng, 12, 0.8);
    const std::vector<double> q = oracle::RandomWeights(rng, 12, 0.8);
    const double t = unit(rng);
    std::vector<double> mix(13);
    for (int i = 0; i <= 12; ++i) mix[i] = t * p[i] + (1 - t) * q[i];
    const auto fp = *ShiftObjectives(shape, p);
    const auto fq = *ShiftObjectives(shape, q);
    const auto fm = *ShiftObjectives(shape, mix);
    for (int k = 0; k < 4; ++k) {
      EXPECT_LE(fm[k], t * fp[k] + (1 - t) * fq[k] + 1e-10);
    }
  }
}

TEST(ObjectiveTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(41);
  const SynthesisProblem problem = Problem({3, 10, 0.7}, 1.0);
  int checked = 0;
  while (checked < 20) {
    std::vector<double> p = oracle::RandomWeights(rng, 10, 0.7);
    ASSERT_OK_AND_ASSIGN(ObjectiveValue f, ObjectiveAndSubgradient(problem, p));
    auto values = *ShiftObjectives(problem.shape, p);
    std::sort(values.begin(), values.end());
    if (values[values.size() - 1] - values[values.size() - 2] < 1e-3) continue;
    ++checked;
    for (size_t i = 0; i < p.size(); ++i) {
      const double h = 1e-6 * p[i];
      std::vector<double> up = p, down = p;
      up[i] += h;
      down[i] -= h;
      const double fd = (ObjectiveAndSubgradient(problem, up)->value -
                         ObjectiveAndSubgradient(problem, down)->value) /
                        (2 * h);
      EXPECT_NEAR(f.subgradient[i], fd,
                  1e-5 * std::max(1.0, std::abs(fd)))
          << "i=" << i;
    }
  }
}

TEST(ObjectiveTest, RejectsNonPositiveWeights) {
  std::vector<double> p = {0.5, 0.25, 0.0, 0.0, 0.0};
  EXPECT_THAT(ObjectiveAndSubgradient(Problem({2, 4, 0.5}, 1.0), p)
                  .status()
                  .code(),
              absl::StatusCode::kInvalidArgument);
}

TEST(FeasibilityProjectTest, FeasiblePointUnchanged) {
  ASSERT_OK_AND_ASSIGN(CactusDensity d, GaussianInit({4, 20, 0.8}, 0.5));
  const std::vector<double> p(d.weights().begin(), d.weights().end());
  ASSERT_OK_AND_ASSIGN(std::vector<double> projected,
                       FeasibilityProject(p, Problem({4, 20, 0.8}, 1.0)));
  for (size_t i = 0; i < p.size(); ++i) {
    EXPECT_NEAR(projected[i], p[i], 1e-14);
  }
}

TEST(FeasibilityProjectTest, FixesScale) {
  ASSERT_OK_AND_ASSIGN(CactusDensity d, GaussianInit({4, 20, 0.8}, 0.5));
  std::vector<double> p(d.weights().begin(), d.weights().end());
  for (double& w : p) w *= 1.01;
  ASSERT_OK_AND_ASSIGN(std::vector<double> projected,
                       FeasibilityProject(p, Problem({4, 20, 0.8}, 1.0)));
  EXPECT_NEAR(Normalization(projected, 0.8), 1.0, 1e-14);
}

TEST(FeasibilityProjectTest, RandomInfeasiblePoints) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const SynthesisProblem problem = Problem({4, 20, 0.8}, 0.3);
  const CellCostTable table =
      *CellCostTable::Build(problem.cost, problem.shape);
  const std::vector<double> a = table.Coefficients();
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p(21);
    for (double& w : p) w = unit(rng) * 0.2;
    ASSERT_OK_AND_ASSIGN(std::vector<double> x,
                         FeasibilityProject(p, problem, 1e-9));
    EXPECT_NEAR(Normalization(x, 0.8), 1.0, 1e-12);
    EXPECT_LE(std::inner_product(a.begin(), a.end(), x.begin(), 0.0),
              0.3 + 1e-12);
    for (double w : x) EXPECT_GE(w, 1e-9);
  }
}

TEST(FeasibilityProjectTest, EmptySet) {
  std::vector<double> p(5, 0.1);
  EXPECT_THAT(FeasibilityProject(p, Problem({2, 4, 0.5}, 0.03), 0.1),
              StatusIs(absl::StatusCode::kFailedPrecondition,
                       HasSubstr("infeasible")));
}

}  // namespace
}  // namespace cactus
