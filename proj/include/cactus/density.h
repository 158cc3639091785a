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

#ifndef CACTUS_DENSITY_H_
#define CACTUS_DENSITY_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace cactus {

// Tolerance on |S - 1| accepted when constructing a density from weights.
inline constexpr double kNormalizationTolerance = 1e-10;

// Grid parameters of a cactus density: `n` cells per unit length, `N` core
// cells on each side of the origin, and geometric tail ratio `r` per cell
// beyond the core.
struct CactusShape {
  int n = 1;
  int N = 2;
  double r = 0.5;

  friend bool operator==(const CactusShape&, const CactusShape&) = default;
};

// Requires 1 <= n < N and 0 < r < 1.
absl::Status ValidateShape(const CactusShape& shape);

// Index i of the grid cell J_{n,i} containing x. Cell 0 is the closed
// interval [-1/(2n), 1/(2n)]; positive cells are closed on the right and
// negative cells on the left.
int64_t CellIndexOf(int n, double x);

// Normalization sum S = p_0 + 2 sum_{0<i<N} p_i + 2 p_N / (1 - r).
double NormalizationSum(std::span<const double> weights, double r);

// A symmetric piecewise-constant density on a 1/n grid. Cell i carries
// probability mass p_{|i|} for |i| < N and p_N r^{|i|-N} beyond, so the
// density height in cell i is n times that mass. Immutable once built.
class CactusDensity {
 public:
  // Validates the shape, that `weights` has N+1 nonnegative finite entries,
  // and that the normalization sum is 1 within kNormalizationTolerance.
  static absl::StatusOr<CactusDensity> Create(CactusShape shape,
                                              std::vector<double> weights);

  // Same as Create, but first divides the weights by their normalization
  // sum.
  static absl::StatusOr<CactusDensity> CreateNormalized(
      CactusShape shape, std::vector<double> weights);

  const CactusShape& shape() const { return shape_; }
  std::span<const double> weights() const { return weights_; }

  // Mass of cell i for any integer i, following the symmetric extension
  // and the geometric tail rule.
  double ExtendedWeight(int64_t i) const;

  double Pdf(double x) const;
  double Cdf(double x) const;

  // `count` i.i.d. draws; the output is a deterministic function of `seed`.
  std::vector<double> Sample(uint64_t seed, int64_t count) const;

  bool IsStrictlyPositive() const;

 private:
  CactusDensity(CactusShape shape, std::vector<double> weights);

  // Mass of [0, x] for x >= 0.
  double MassFromOrigin(double x) const;

  CactusShape shape_;
  std::vector<double> weights_;
  // core_prefix_[j] = sum_{1<=i<=j} p_i for j < N.
  std::vector<double> core_prefix_;
};

// Warm start: cell-averages N(0, sigma^2) over the grid, keeps the shape's
// tail ratio, and renormalizes. All weights are strictly positive.
absl::StatusOr<CactusDensity> GaussianInit(const CactusShape& shape,
                                           double sigma);

}  // namespace cactus

#endif  // CACTUS_DENSITY_H_
