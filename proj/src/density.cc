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
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"

namespace cactus {
namespace {

// Largest cell index we represent; beyond this every tail mass underflows.
constexpr int64_t kMaxCellIndex = int64_t{1} << 53;

// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw. Written
// out explicitly so that samples are identical across standard libraries.
double UniformUnit(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace

absl::Status ValidateShape(const CactusShape& shape) {
  if (shape.n < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("n must be a positive integer, got ", shape.n));
  }
  if (shape.N <= shape.n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "N must exceed n, got n=", shape.n, " N=", shape.N));
  }
  if (!(shape.r > 0.0 && shape.r < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("r must lie strictly inside (0, 1), got ", shape.r));
  }
  return absl::OkStatus();
}

int64_t CellIndexOf(int n, double x) {
  const double scaled = n * x;
  if (std::isnan(scaled)) return 0;
  const double limit = static_cast<double>(kMaxCellIndex);
  if (scaled > 0.5) {
    return static_cast<int64_t>(std::min(std::ceil(scaled - 0.5), limit));
  }
  if (scaled < -0.5) {
    return static_cast<int64_t>(std::max(std::floor(scaled + 0.5), -limit));
  }
  return 0;
}

double NormalizationSum(std::span<const double> weights, double r) {
  const size_t last = weights.size() - 1;
  double sum = weights[0];
  for (size_t i = 1; i < last; ++i) sum += 2.0 * weights[i];
  return sum + 2.0 * weights[last] / (1.0 - r);
}

CactusDensity::CactusDensity(CactusShape shape, std::vector<double> weights)
    : shape_(shape), weights_(std::move(weights)), core_prefix_(shape.N) {
  core_prefix_[0] = 0.0;
  for (int j = 1; j < shape_.N; ++j) {
    core_prefix_[j] = core_prefix_[j - 1] + weights_[j];
  }
}

absl::StatusOr<CactusDensity> CactusDensity::Create(
    CactusShape shape, std::vector<double> weights) {
  if (absl::Status status = ValidateShape(shape); !status.ok()) return status;
  if (weights.size() != static_cast<size_t>(shape.N) + 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("expected N+1=", shape.N + 1, " weights, got ",
                     weights.size()));
  }
  for (size_t i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i]) || weights[i] < 0.0) {
      return absl::InvalidArgumentError(
          absl::StrCat("weight p_", i, " must be finite and nonnegative, got ",
                       weights[i]));
    }
  }
  const double sum = NormalizationSum(weights, shape.r);
  if (std::abs(sum - 1.0) > kNormalizationTolerance) {
    return absl::InvalidArgumentError(
        absl::StrCat("weights are not normalized: S = ", sum));
  }
  return CactusDensity(shape, std::move(weights));
}

absl::StatusOr<CactusDensity> CactusDensity::CreateNormalized(
    CactusShape shape, std::vector<double> weights) {
  if (absl::Status status = ValidateShape(shape); !status.ok()) return status;
  if (weights.size() != static_cast<size_t>(shape.N) + 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("expected N+1=", shape.N + 1, " weights, got ",
                     weights.size()));
  }
  const double sum = NormalizationSum(weights, shape.r);
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    return absl::InvalidArgumentError(
        absl::StrCat("cannot normalize weights with S = ", sum));
  }
  for (double& w : weights) w /= sum;
  return Create(shape, std::move(weights));
}

double CactusDensity::ExtendedWeight(int64_t i) const {
  const int64_t a = i < 0 ? -i : i;
  if (a <= shape_.N) return weights_[a];
  return weights_[shape_.N] *
         std::pow(shape_.r, static_cast<double>(a - shape_.N));
}

double CactusDensity::Pdf(double x) const {
  return shape_.n * ExtendedWeight(CellIndexOf(shape_.n, x));
}

double CactusDensity::MassFromOrigin(double x) const {
  const int n = shape_.n;
  const int N = shape_.N;
  const int64_t i = CellIndexOf(n, x);
  if (i == 0) return n * weights_[0] * x;
  double full;
  if (i - 1 <= N - 1) {
    full = core_prefix_[i - 1];
  } else {
    const double tail_cells = static_cast<double>(i - N);
    full = core_prefix_[N - 1] + weights_[N] *
                                     (1.0 - std::pow(shape_.r, tail_cells)) /
                                     (1.0 - shape_.r);
  }
  const double partial =
      n * ExtendedWeight(i) * (x - (static_cast<double>(i) - 0.5) / n);
  return 0.5 * weights_[0] + full + partial;
}

double CactusDensity::Cdf(double x) const {
  if (std::isnan(x)) return x;
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  const double value =
      x >= 0.0 ? 0.5 + MassFromOrigin(x) : 0.5 - MassFromOrigin(-x);
  return std::clamp(value, 0.0, 1.0);
}

std::vector<double> CactusDensity::Sample(uint64_t seed, int64_t count) const {
  std::vector<double> out;
  if (count <= 0) return out;
  out.reserve(count);

  const int n = shape_.n;
  const int N = shape_.N;
  // cumulative[j] is the probability of landing in cells {-j..j}.
  std::vector<double> cumulative(N);
  cumulative[0] = weights_[0];
  for (int j = 1; j < N; ++j) {
    cumulative[j] = cumulative[j - 1] + 2.0 * weights_[j];
  }
  const double total =
      cumulative[N - 1] + 2.0 * weights_[N] / (1.0 - shape_.r);
  const double log_r = std::log(shape_.r);

  std::mt19937_64 gen(seed);
  for (int64_t s = 0; s < count; ++s) {
    const double u = UniformUnit(gen) * total;
    int64_t cell =
        std::upper_bound(cumulative.begin(), cumulative.end(), u) -
        cumulative.begin();
    if (cell >= N) {
      // Tail cells are geometric with success probability 1 - r.
      const double v = 1.0 - UniformUnit(gen);
      cell = N + static_cast<int64_t>(std::floor(std::log(v) / log_r));
    }
    const double offset = UniformUnit(gen);
    double x = (static_cast<double>(cell) - 0.5 + offset) / n;
    if (cell > 0 && (gen() >> 63) != 0) x = -x;
    out.push_back(x);
  }
  return out;
}

bool CactusDensity::IsStrictlyPositive() const {
  return std::all_of(weights_.begin(), weights_.end(),
                     [](double w) { return w > 0.0; });
}

absl::StatusOr<CactusDensity> GaussianInit(const CactusShape& shape,
                                           double sigma) {
  if (absl::Status status = ValidateShape(shape); !status.ok()) return status;
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sigma must be positive and finite, got ", sigma));
  }
  const double scale = 1.0 / (shape.n * sigma * std::sqrt(2.0));
  std::vector<double> weights(shape.N + 1);
  weights[0] = std::erf(0.5 * scale);
  for (int i = 1; i <= shape.N; ++i) {
    const double lo = (i - 0.5) * scale;
    const double hi = (i + 0.5) * scale;
    weights[i] = 0.5 * (std::erfc(lo) - std::erfc(hi));
  }
  for (double& w : weights) {
    w = std::max(w, std::numeric_limits<double>::min());
  }
  return CactusDensity::CreateNormalized(shape, std::move(weights));
}

}  // namespace cactus
