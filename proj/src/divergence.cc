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

#include "cactus/divergence.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "cactus/density.h"
#include "cactus/shift_terms.h"

namespace cactus {
namespace {

// Largest grid shift, in cells, accepted by the moment routines.
constexpr int64_t kMaxGridShift = int64_t{1} << 24;

// log of the extended cell weight, valid for any integer index.
class LogWeights {
 public:
  explicit LogWeights(const CactusDensity& density)
      : N_(density.shape().N), log_r_(std::log(density.shape().r)) {
    const auto p = density.weights();
    logs_.resize(p.size());
    for (size_t i = 0; i < p.size(); ++i) logs_[i] = std::log(p[i]);
  }

  double operator()(int64_t i) const {
    const int64_t a = i < 0 ? -i : i;
    if (a <= N_) return logs_[a];
    return logs_[N_] + static_cast<double>(a - N_) * log_r_;
  }

 private:
  int N_;
  double log_r_;
  std::vector<double> logs_;
};

// Streaming log-sum-exp.
class LogSum {
 public:
  void Add(double log_term) {
    if (log_term == -std::numeric_limits<double>::infinity()) return;
    if (log_term > max_) {
      sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    } else {
      sum_ += std::exp(log_term - max_);
    }
  }
  double Value() const { return max_ + std::log(sum_); }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
};

double SymmetricTerm(const CactusDensity& density, int k) {
  const auto p = density.weights();
  const int N = density.shape().N;
  const double r = density.shape().r;
  const double log_r = std::log(r);
  double total = 0.0;
  internal::ForEachShiftTerm(N, k, [&](double weight, int first, int second,
                                       int power) {
    const double u = p[first];
    const double v = p[second] * std::pow(r, power);
    const double log_ratio =
        std::log(p[first]) - std::log(p[second]) - power * log_r;
    total += weight * (u - v) * log_ratio;
  });
  return total + p[N] * internal::TailCoefficient(r, k);
}

}  // namespace

ShiftDecomposition DecomposeShift(int n, double a) {
  const double scaled = n * a;
  int64_t k;
  if (scaled > 0.0) {
    k = static_cast<int64_t>(std::ceil(scaled));
  } else if (scaled < -1.0) {
    k = static_cast<int64_t>(std::floor(scaled + 1.0));
  } else {
    k = 0;
  }
  const double delta = std::clamp(static_cast<double>(k) - scaled, 0.0, 1.0);
  return {k, delta};
}

absl::Status CheckStrictlyPositive(const CactusDensity& density) {
  const auto p = density.weights();
  for (size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "infeasible density: weight p_", i,
          " is zero, so the shifted divergence is infinite"));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<double> BkSymmetric(const CactusDensity& density, int k) {
  if (absl::Status s = CheckStrictlyPositive(density); !s.ok()) return s;
  const int shift = std::abs(k);
  if (shift > density.shape().N) {
    return absl::InvalidArgumentError(absl::StrCat(
        "shift index |k|=", shift, " exceeds N=", density.shape().N));
  }
  if (shift == 0) return 0.0;
  return SymmetricTerm(density, shift);
}

absl::StatusOr<double> SupKl(const CactusDensity& density) {
  if (absl::Status s = CheckStrictlyPositive(density); !s.ok()) return s;
  double best = 0.0;
  for (int k = 1; k <= density.shape().n; ++k) {
    best = std::max(best, SymmetricTerm(density, k));
  }
  return best;
}

absl::StatusOr<double> KlAtShift(const CactusDensity& density, double a) {
  if (!(std::abs(a) <= 1.0)) {
    return absl::OutOfRangeError(
        absl::StrCat("shift must satisfy |a| <= 1, got ", a));
  }
  if (absl::Status s = CheckStrictlyPositive(density); !s.ok()) return s;
  const ShiftDecomposition shift = DecomposeShift(density.shape().n, a);
  // B_l = B_{-l} for symmetric densities.
  double value = 0.0;
  if (shift.delta > 0.0) {
    value += shift.delta *
             SymmetricTerm(density, static_cast<int>(std::abs(shift.k - 1)));
  }
  if (shift.delta < 1.0 && shift.k != 0) {
    value += (1.0 - shift.delta) *
             SymmetricTerm(density, static_cast<int>(std::abs(shift.k)));
  }
  return value;
}

absl::StatusOr<int64_t> GridShiftIndex(int n, double a) {
  const double scaled = n * a;
  const double k = std::round(scaled);
  if (!std::isfinite(scaled) ||
      std::abs(scaled - k) > 1e-9 * std::max(1.0, std::abs(scaled))) {
    return absl::InvalidArgumentError(absl::StrCat(
        "shift a=", a, " is not a multiple of the cell width 1/", n));
  }
  if (std::abs(k) > static_cast<double>(kMaxGridShift)) {
    return absl::OutOfRangeError(absl::StrCat("shift a=", a, " is too large"));
  }
  return static_cast<int64_t>(k);
}

absl::StatusOr<double> LogMgf(const CactusDensity& density, double a,
                              int lambda) {
  if (lambda < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("moment order must be a positive integer, got ", lambda));
  }
  if (absl::Status s = CheckStrictlyPositive(density); !s.ok()) return s;
  absl::StatusOr<int64_t> index = GridShiftIndex(density.shape().n, a);
  if (!index.ok()) return index.status();
  const int64_t k = *index < 0 ? -*index : *index;
  if (k == 0) return 0.0;

  const int N = density.shape().N;
  const double r = density.shape().r;
  const double log_r = std::log(r);
  const LogWeights log_p(density);
  const double order = lambda;

  // In either tail the summand p_i^(lambda+1) p_{i+k}^(-lambda) changes by
  // the factor r^((lambda+1) - lambda) per cell.
  const double tail_step = (order + 1.0) * log_r - order * log_r;
  if (!(tail_step < 0.0)) {
    return absl::OutOfRangeError(absl::StrCat(
        "moment of order ", lambda, " is unbounded for shift ", a));
  }

  LogSum sum;
  for (int64_t i = -N - k; i <= N; ++i) {
    const double li = log_p(i);
    sum.Add(li + order * (li - log_p(i + k)));
  }
  const double log_tail_norm = std::log(density.weights()[N]) - std::log1p(-r);
  // i >= N+1: p_i / p_{i+k} = r^{-k}.
  sum.Add(log_tail_norm + log_r - order * static_cast<double>(k) * log_r);
  // i <= -N-k-1: p_i / p_{i+k} = r^{k}.
  sum.Add(log_tail_norm + static_cast<double>(k + 1) * log_r +
          order * static_cast<double>(k) * log_r);
  return sum.Value();
}

absl::StatusOr<double> DeltaOfEpsilonSingle(const CactusDensity& density,
                                            double a, double epsilon) {
  if (!(epsilon >= 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be nonnegative, got ", epsilon));
  }
  if (absl::Status s = CheckStrictlyPositive(density); !s.ok()) return s;
  absl::StatusOr<int64_t> index = GridShiftIndex(density.shape().n, a);
  if (!index.ok()) return index.status();
  const int64_t k = *index < 0 ? -*index : *index;
  if (k == 0) return 0.0;

  const int N = density.shape().N;
  const double r = density.shape().r;
  const LogWeights log_p(density);

  // sum_i (p_i - e^eps p_{i+k})^+ written as p_i (1 - e^x)^+.
  auto excess = [&](double log_mass, double x) {
    return x >= 0.0 ? 0.0 : std::exp(log_mass) * -std::expm1(x);
  };
  double total = 0.0;
  for (int64_t i = -N - k; i <= N; ++i) {
    const double li = log_p(i);
    total += excess(li, epsilon + log_p(i + k) - li);
  }
  // i >= N+1 has ratio r^k; the left tail has ratio r^{-k} >= 1 and
  // contributes nothing.
  const double log_right_mass = std::log(density.weights()[N]) + std::log(r) -
                                std::log1p(-r);
  total += excess(log_right_mass,
                  epsilon + static_cast<double>(k) * std::log(r));
  return std::clamp(total, 0.0, 1.0);
}

absl::StatusOr<double> GaussianKl(double s, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sigma must be positive and finite, got ", sigma));
  }
  if (!(s >= 0.0) || !std::isfinite(s)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sensitivity must be nonnegative, got ", s));
  }
  return s * s / (2.0 * sigma * sigma);
}

}  // namespace cactus
