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

#include <array>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "cactus/density.h"

namespace cactus {
namespace {

// Exponents with closed-form cell costs and tail sums.
constexpr int kMaxClosedFormAlpha = 4;

std::optional<int> ClosedFormAlpha(double alpha) {
  const double rounded = std::round(alpha);
  if (rounded == alpha && rounded >= 1 && rounded <= kMaxClosedFormAlpha) {
    return static_cast<int>(rounded);
  }
  return std::nullopt;
}

double Binomial(int m, int j) {
  double result = 1.0;
  for (int t = 1; t <= j; ++t) result = result * (m - j + t) / t;
  return result;
}

// Coefficients of the polynomial (i + 1/2)^m - (i - 1/2)^m in i, lowest
// degree first.
std::vector<double> CellDifferencePolynomial(int m) {
  std::vector<double> coefficients(m, 0.0);
  for (int j = 1; j <= m; j += 2) {
    coefficients[m - j] = 2.0 * Binomial(m, j) * std::pow(0.5, j);
  }
  return coefficients;
}

// sum_{j >= 0} j^t r^j for t = 0..4, via Eulerian polynomials.
std::array<double, kMaxClosedFormAlpha + 1> PowerGeometricSums(double r) {
  const double q = 1.0 - r;
  return {
      1.0 / q,
      r / (q * q),
      r * (1.0 + r) / (q * q * q),
      r * (1.0 + 4.0 * r + r * r) / (q * q * q * q),
      r * (1.0 + 11.0 * r + 11.0 * r * r + r * r * r) / (q * q * q * q * q),
  };
}

// Unit-sensitivity cost coefficients.
struct Normalized {
  double alpha;
  double beta;
};

Normalized Effective(const CostModel& model) {
  return {model.alpha,
          model.beta * std::pow(model.sensitivity, model.alpha)};
}

double NormalizedCellCost(Normalized c, int n, int64_t i) {
  const double alpha = c.alpha;
  const double scale = c.beta / ((alpha + 1.0) * std::pow(n, alpha));
  const double index = static_cast<double>(i < 0 ? -i : i);
  if (index == 0.0) return scale * std::pow(0.5, alpha);
  if (std::optional<int> a = ClosedFormAlpha(alpha)) {
    const std::vector<double> poly = CellDifferencePolynomial(*a + 1);
    double value = 0.0;
    for (int d = static_cast<int>(poly.size()) - 1; d >= 0; --d) {
      value = value * index + poly[d];
    }
    return scale * value;
  }
  // (i+1/2)^m - (i-1/2)^m = i^m [(1+h)^m - (1-h)^m] with h = 1/(2i).
  const double m = alpha + 1.0;
  const double h = 0.5 / index;
  return scale * std::pow(index, m) *
         (std::expm1(m * std::log1p(h)) - std::expm1(m * std::log1p(-h)));
}

double ClosedFormTailSum(Normalized c, const CactusShape& shape, int alpha) {
  const double scale = c.beta / ((alpha + 1.0) * std::pow(shape.n, alpha));
  const std::vector<double> poly = CellDifferencePolynomial(alpha + 1);
  const auto sums = PowerGeometricSums(shape.r);
  const double big_n = shape.N;
  double total = 0.0;
  for (int d = 0; d < static_cast<int>(poly.size()); ++d) {
    if (poly[d] == 0.0) continue;
    // sum_{j>=0} (N + j)^d r^j by binomial expansion.
    double shifted = 0.0;
    for (int t = 0; t <= d; ++t) {
      shifted += Binomial(d, t) * std::pow(big_n, d - t) * sums[t];
    }
    total += poly[d] * shifted;
  }
  return scale * total;
}

// Direct summation for non-integer exponents. Stops once the geometric
// majorant of the remainder, based on c_{n,i} <= beta ((i+1/2)/n)^alpha, is
// negligible against the running total.
double SummedTailSum(Normalized c, const CactusShape& shape) {
  const double r = shape.r;
  const double majorant_scale = c.beta / std::pow(shape.n, c.alpha);
  double total = 0.0;
  double power = 1.0;  // r^{i-N}
  for (int64_t i = shape.N;; ++i) {
    const double term = NormalizedCellCost(c, shape.n, i) * power;
    total += term;
    power *= r;
    const double next = static_cast<double>(i + 1);
    const double ratio = r * std::pow((next + 1.5) / (next + 0.5), c.alpha);
    if (ratio < 1.0 && term < 1e-15 * total) {
      const double remainder = majorant_scale *
                               std::pow(next + 0.5, c.alpha) * power /
                               (1.0 - ratio);
      if (remainder < 1e-14 * total) break;
    }
    if (power == 0.0) break;
  }
  return total;
}

}  // namespace

std::string_view CostFamilyName(CostFamily family) {
  switch (family) {
    case CostFamily::kQuadratic:
      return "quadratic";
    case CostFamily::kPower:
      return "power";
  }
  return "unknown";
}

absl::StatusOr<CostFamily> ParseCostFamily(std::string_view name) {
  if (name == "quadratic") return CostFamily::kQuadratic;
  if (name == "power") return CostFamily::kPower;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown cost family '", std::string(name),
                   "', expected 'quadratic' or 'power'"));
}

CostModel CostModel::Quadratic(double budget, double sensitivity) {
  return {CostFamily::kQuadratic, 2.0, 1.0, budget, sensitivity};
}

CostModel CostModel::Power(double alpha, double beta, double budget,
                           double sensitivity) {
  return {CostFamily::kPower, alpha, beta, budget, sensitivity};
}

double CostModel::operator()(double x) const {
  return beta * std::pow(std::abs(x), alpha);
}

absl::Status ValidateCostModel(const CostModel& model) {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(model.alpha)) {
    return absl::InvalidArgumentError(
        absl::StrCat("alpha must be positive, got ", model.alpha));
  }
  if (!positive(model.beta)) {
    return absl::InvalidArgumentError(
        absl::StrCat("beta must be positive, got ", model.beta));
  }
  if (!positive(model.budget)) {
    return absl::InvalidArgumentError(
        absl::StrCat("budget C must be positive, got ", model.budget));
  }
  if (!positive(model.sensitivity)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "sensitivity s must be positive, got ", model.sensitivity));
  }
  if (model.family == CostFamily::kQuadratic &&
      (model.alpha != 2.0 || model.beta != 1.0)) {
    return absl::InvalidArgumentError(
        "quadratic cost requires alpha = 2 and beta = 1");
  }
  return absl::OkStatus();
}

CostModel NormalizeProblem(const CostModel& model) {
  if (model.sensitivity == 1.0) return model;
  const Normalized c = Effective(model);
  return CostModel::Power(c.alpha, c.beta, model.budget, 1.0);
}

double CellCost(const CostModel& model, const CactusShape& shape, int64_t i) {
  return NormalizedCellCost(Effective(model), shape.n, i);
}

double TailCostSum(const CostModel& model, const CactusShape& shape) {
  const Normalized c = Effective(model);
  if (std::optional<int> alpha = ClosedFormAlpha(c.alpha)) {
    return ClosedFormTailSum(c, shape, *alpha);
  }
  return SummedTailSum(c, shape);
}

double TailCostBound(const CostModel& model, const CactusShape& shape) {
  const Normalized c = Effective(model);
  const double alpha = c.alpha;
  const double w = (shape.N - 0.5) / shape.n;
  const double log_inv_r = -std::log(shape.r);
  const double l_alpha = std::max(1.0, std::pow(2.0, alpha - 1.0));
  const double polylog_bound =
      (2.0 * std::pow(alpha / std::exp(1.0), alpha) * log_inv_r +
       std::tgamma(alpha + 1.0)) /
      (shape.r * std::pow(shape.n, alpha) * std::pow(log_inv_r, alpha + 1.0));
  return c.beta * l_alpha * (std::pow(w, alpha) / (1.0 - shape.r) +
                             polylog_bound);
}

absl::StatusOr<CellCostTable> CellCostTable::Build(const CostModel& model,
                                                   const CactusShape& shape) {
  if (absl::Status status = ValidateCostModel(model); !status.ok()) {
    return status;
  }
  if (absl::Status status = ValidateShape(shape); !status.ok()) return status;
  CellCostTable table;
  table.shape_ = shape;
  table.budget_ = model.budget;
  table.values_.resize(shape.N);
  for (int i = 0; i < shape.N; ++i) table.values_[i] = CellCost(model, shape, i);
  table.tail_sum_ = TailCostSum(model, shape);
  return table;
}

std::vector<double> CellCostTable::Coefficients() const {
  std::vector<double> a(shape_.N + 1);
  a[0] = values_[0];
  for (int i = 1; i < shape_.N; ++i) a[i] = 2.0 * values_[i];
  a[shape_.N] = 2.0 * tail_sum_;
  return a;
}

absl::StatusOr<double> ExpectedCost(const CactusDensity& density,
                                    const CellCostTable& table) {
  if (!(density.shape() == table.shape())) {
    return absl::InvalidArgumentError(absl::StrCat(
        "density shape (n=", density.shape().n, ", N=", density.shape().N,
        ", r=", density.shape().r, ") does not match cost table shape (n=",
        table.shape().n, ", N=", table.shape().N, ", r=", table.shape().r,
        ")"));
  }
  const std::vector<double> a = table.Coefficients();
  const auto p = density.weights();
  double total = 0.0;
  for (size_t i = 0; i < a.size(); ++i) total += a[i] * p[i];
  return total;
}

absl::StatusOr<double> ExpectedCost(const CactusDensity& density,
                                    const CostModel& model) {
  absl::StatusOr<CellCostTable> table =
      CellCostTable::Build(model, density.shape());
  if (!table.ok()) return table.status();
  return ExpectedCost(density, *table);
}

}  // namespace cactus
