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

#ifndef CACTUS_COST_H_
#define CACTUS_COST_H_

#include <cstdint>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "cactus/density.h"

namespace cactus {

enum class CostFamily { kQuadratic, kPower };

std::string_view CostFamilyName(CostFamily family);
absl::StatusOr<CostFamily> ParseCostFamily(std::string_view name);

// Noise cost c(x) = beta |x|^alpha with expected-cost budget `budget` for a
// query of sensitivity `sensitivity`. The quadratic family pins alpha = 2 and
// beta = 1.
struct CostModel {
  CostFamily family = CostFamily::kQuadratic;
  double alpha = 2.0;
  double beta = 1.0;
  double budget = 1.0;
  double sensitivity = 1.0;

  static CostModel Quadratic(double budget, double sensitivity = 1.0);
  static CostModel Power(double alpha, double beta, double budget,
                         double sensitivity = 1.0);

  double operator()(double x) const;

  friend bool operator==(const CostModel&, const CostModel&) = default;
};

absl::Status ValidateCostModel(const CostModel& model);

// Rescales to unit sensitivity: a problem at sensitivity s with cost c(x)
// is the unit-sensitivity problem with cost c(s x). For a power law this
// multiplies beta by s^alpha. After the rescale a quadratic model with
// s != 1 is reported as a power law with alpha = 2.
CostModel NormalizeProblem(const CostModel& model);

// The cell and tail quantities below are taken with respect to the
// unit-sensitivity model, i.e. they apply NormalizeProblem internally.

// c_{n,i} = integral over cell J_{n,i} of n c(x) dx. Symmetric in i.
double CellCost(const CostModel& model, const CactusShape& shape, int64_t i);

// sum_{i >= N} c_{n,i} r^{i-N}.
double TailCostSum(const CostModel& model, const CactusShape& shape);

// Analytic upper bound on TailCostSum for c(x) <= beta x^alpha:
//   beta l_a (w^a/(1-r) + (2 (a/e)^a L + Gamma(a+1)) / (r n^a L^(a+1)))
// with w = (N - 1/2)/n, L = log(1/r), l_a = max(1, 2^(a-1)).
double TailCostBound(const CostModel& model, const CactusShape& shape);

// Per-cell costs for one (model, shape) pair, computed once and shared.
class CellCostTable {
 public:
  static absl::StatusOr<CellCostTable> Build(const CostModel& model,
                                             const CactusShape& shape);

  const CactusShape& shape() const { return shape_; }
  double budget() const { return budget_; }
  // c_{n,0} ... c_{n,N-1}.
  const std::vector<double>& values() const { return values_; }
  double tail_sum() const { return tail_sum_; }

  // Coefficients a with E[c] = a . p, i.e. (c_0, 2c_1, ..., 2c_{N-1},
  // 2 tail_sum).
  std::vector<double> Coefficients() const;

 private:
  CactusShape shape_;
  double budget_ = 0.0;
  std::vector<double> values_;
  double tail_sum_ = 0.0;
};

// Expected cost of the noise, p_0 c_0 + 2 sum p_i c_i + 2 p_N tail_sum.
absl::StatusOr<double> ExpectedCost(const CactusDensity& density,
                                    const CellCostTable& table);
absl::StatusOr<double> ExpectedCost(const CactusDensity& density,
                                    const CostModel& model);

}  // namespace cactus

#endif  // CACTUS_COST_H_
