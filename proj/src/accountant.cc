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

#include "cactus/accountant.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "cactus/density.h"
#include "cactus/divergence.h"

namespace cactus {
namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

absl::Status ValidateLambdaMax(int lambda_max) {
  if (lambda_max < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("lambda_max must be at least 1, got ", lambda_max));
  }
  return absl::OkStatus();
}

absl::Status ValidateRate(double q) {
  if (!(q > 0.0 && q <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("subsampling rate must lie in (0, 1], got ", q));
  }
  return absl::OkStatus();
}

absl::Status ValidateSigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sigma must be positive and finite, got ", sigma));
  }
  return absl::OkStatus();
}

class LogSum {
 public:
  void Add(double log_term) {
    if (log_term == -kInfinity) return;
    if (log_term > max_) {
      sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    } else {
      sum_ += std::exp(log_term - max_);
    }
  }
  double Value() const { return max_ + std::log(sum_); }

 private:
  double max_ = -kInfinity;
  double sum_ = 0.0;
};

// log((1 - q) + q e^d), the log density ratio of the mixture to the base.
double LogMixture(double q, double d) {
  if (q == 1.0) return d;
  if (d > 30.0) return d + std::log(q + (1.0 - q) * std::exp(-d));
  return std::log1p(q * std::expm1(d));
}

double LogWeight(std::span<const double> log_p, int N, double log_r,
                 int64_t i) {
  const int64_t a = i < 0 ? -i : i;
  if (a <= N) return log_p[a];
  return log_p[N] + static_cast<double>(a - N) * log_r;
}

}  // namespace

absl::Status ValidateQuery(const CompositionQuery& query) {
  if (!(query.delta > 0.0 && query.delta <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1], got ", query.delta));
  }
  if (query.compositions < 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "number of compositions must be at least 1, got ", query.compositions));
  }
  if (absl::Status s = ValidateRate(query.q); !s.ok()) return s;
  return ValidateLambdaMax(query.lambda_max);
}

absl::StatusOr<MomentsCurve> MechanismMoments(const CactusDensity& density,
                                              int lambda_max) {
  if (absl::Status s = ValidateLambdaMax(lambda_max); !s.ok()) return s;
  MomentsCurve curve;
  curve.shift = 1.0;
  for (int lambda = 1; lambda <= lambda_max; ++lambda) {
    absl::StatusOr<double> alpha = LogMgf(density, 1.0, lambda);
    if (!alpha.ok() && alpha.status().code() != absl::StatusCode::kOutOfRange) {
      return alpha.status();
    }
    if (!alpha.ok() || !std::isfinite(*alpha)) {
      if (lambda == 1) {
        return absl::FailedPreconditionError(
            "mechanism is not accountable: its first privacy-loss moment is "
            "unbounded");
      }
      break;
    }
    curve.lambdas.push_back(lambda);
    curve.alphas.push_back(*alpha);
  }
  return curve;
}

absl::StatusOr<MomentsCurve> SubsampledMoments(const CactusDensity& density,
                                               double q, int lambda_max) {
  if (absl::Status s = ValidateLambdaMax(lambda_max); !s.ok()) return s;
  if (absl::Status s = ValidateRate(q); !s.ok()) return s;
  if (absl::Status s = CheckStrictlyPositive(density); !s.ok()) return s;

  const int N = density.shape().N;
  const int64_t k = density.shape().n;  // unit shift
  const double r = density.shape().r;
  const double log_r = std::log(r);
  const auto p = density.weights();
  std::vector<double> log_p(p.size());
  for (size_t i = 0; i < p.size(); ++i) log_p[i] = std::log(p[i]);

  // Per-cell log of mixture-to-base ratio for cells -N..N+k.
  std::vector<double> log_mass;
  std::vector<double> log_ratio;
  for (int64_t i = -N; i <= N + k; ++i) {
    const double li = LogWeight(log_p, N, log_r, i);
    log_mass.push_back(li);
    log_ratio.push_back(
        LogMixture(q, LogWeight(log_p, N, log_r, i - k) - li));
  }
  const double log_tail_norm = log_p[N] - std::log1p(-r);
  // Cells i >= N+k+1: ratio (1-q) + q r^{-k}; cells i <= -N-1: (1-q) + q r^k.
  log_mass.push_back(log_tail_norm + static_cast<double>(k + 1) * log_r);
  log_ratio.push_back(LogMixture(q, -static_cast<double>(k) * log_r));
  log_mass.push_back(log_tail_norm + log_r);
  log_ratio.push_back(LogMixture(q, static_cast<double>(k) * log_r));

  MomentsCurve curve;
  curve.shift = 1.0;
  curve.subsampling_q = q;
  for (int lambda = 1; lambda <= lambda_max; ++lambda) {
    LogSum mixture_first;  // E_mix[(mix/base)^lambda]
    LogSum base_first;     // E_base[(base/mix)^lambda]
    for (size_t j = 0; j < log_mass.size(); ++j) {
      mixture_first.Add(log_mass[j] + (lambda + 1.0) * log_ratio[j]);
      base_first.Add(log_mass[j] - lambda * log_ratio[j]);
    }
    const double alpha = std::max(mixture_first.Value(), base_first.Value());
    if (!std::isfinite(alpha)) {
      if (lambda == 1) {
        return absl::FailedPreconditionError(
            "mechanism is not accountable: its first subsampled moment is "
            "unbounded");
      }
      break;
    }
    curve.lambdas.push_back(lambda);
    curve.alphas.push_back(alpha);
  }
  return curve;
}

absl::StatusOr<MomentsCurve> GaussianMoments(double sigma, int lambda_max) {
  if (absl::Status s = ValidateSigma(sigma); !s.ok()) return s;
  if (absl::Status s = ValidateLambdaMax(lambda_max); !s.ok()) return s;
  MomentsCurve curve;
  curve.shift = 1.0;
  for (int lambda = 1; lambda <= lambda_max; ++lambda) {
    curve.lambdas.push_back(lambda);
    curve.alphas.push_back(lambda * (lambda + 1.0) / (2.0 * sigma * sigma));
  }
  return curve;
}

absl::StatusOr<MomentsCurve> SubsampledGaussianMoments(double sigma, double q,
                                                       int lambda_max) {
  if (absl::Status s = ValidateRate(q); !s.ok()) return s;
  if (q == 1.0) {
    absl::StatusOr<MomentsCurve> curve = GaussianMoments(sigma, lambda_max);
    if (curve.ok()) curve->subsampling_q = 1.0;
    return curve;
  }
  if (absl::Status s = ValidateSigma(sigma); !s.ok()) return s;
  if (absl::Status s = ValidateLambdaMax(lambda_max); !s.ok()) return s;
  const double var = sigma * sigma;

  MomentsCurve curve;
  curve.shift = 1.0;
  curve.subsampling_q = q;
  for (int lambda = 1; lambda <= lambda_max; ++lambda) {
    // E_base[(mix/base)^(lambda+1)] with E_base[L^j] = exp(j(j-1)/(2 var)).
    const int m = lambda + 1;
    LogSum mixture_first;
    for (int j = 0; j <= m; ++j) {
      const double log_binomial =
          std::lgamma(m + 1.0) - std::lgamma(j + 1.0) - std::lgamma(m - j + 1.0);
      const double log_weight = (m - j) * std::log1p(-q) + j * std::log(q);
      mixture_first.Add(log_binomial + log_weight + j * (j - 1.0) / (2.0 * var));
    }
    // E_base[(base/mix)^lambda]; the integrand is at most (1-q)^{-lambda}
    // times the base density, so it is integrated after dividing that out.
    auto integrand = [&](double x) {
      const double log_density =
          -0.5 * x * x / var - 0.5 * std::log(2.0 * M_PI * var);
      const double log_ratio = LogMixture(q, (2.0 * x - 1.0) / (2.0 * var));
      return std::exp(log_density - lambda * (log_ratio - std::log1p(-q)));
    };
    const double scaled =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            integrand, -kInfinity, kInfinity, 20, 1e-14);
    const double base_first = std::log(scaled) - lambda * std::log1p(-q);
    curve.lambdas.push_back(lambda);
    curve.alphas.push_back(std::max(mixture_first.Value(), base_first));
  }
  return curve;
}

absl::StatusOr<PrivacyReport> ComposeEpsilon(const MomentsCurve& curve,
                                             const CompositionQuery& query) {
  if (absl::Status s = ValidateQuery(query); !s.ok()) return s;
  if (curve.lambdas.empty() || curve.lambdas.size() != curve.alphas.size()) {
    return absl::InvalidArgumentError("moments curve is empty or malformed");
  }
  PrivacyReport report;
  report.query = query;
  report.curve = curve;
  report.epsilon = kInfinity;
  const double log_inv_delta = -std::log(query.delta);
  const double steps = static_cast<double>(query.compositions);
  for (size_t j = 0; j < curve.lambdas.size(); ++j) {
    const int lambda = curve.lambdas[j];
    if (lambda > query.lambda_max) continue;
    const double epsilon = (steps * curve.alphas[j] + log_inv_delta) / lambda;
    if (epsilon < report.epsilon) {
      report.epsilon = epsilon;
      report.argmin_lambda = lambda;
    }
  }
  if (!std::isfinite(report.epsilon)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "moments curve has no order at or below lambda_max=",
        query.lambda_max));
  }
  return report;
}

absl::StatusOr<double> ComposeDelta(const MomentsCurve& curve,
                                    int64_t compositions, double epsilon,
                                    int lambda_max) {
  CompositionQuery query{.delta = 1.0,
                         .compositions = compositions,
                         .q = curve.subsampling_q.value_or(1.0),
                         .lambda_max = lambda_max};
  auto epsilon_at = [&](double delta) -> absl::StatusOr<double> {
    query.delta = delta;
    absl::StatusOr<PrivacyReport> report = ComposeEpsilon(curve, query);
    if (!report.ok()) return report.status();
    return report->epsilon;
  };
  absl::StatusOr<double> at_one = epsilon_at(1.0);
  if (!at_one.ok()) return at_one.status();
  if (*at_one > epsilon) return 1.0;

  // epsilon(delta) decreases in delta; bisect on log(delta).
  double lo = std::log(std::numeric_limits<double>::min());
  double hi = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    absl::StatusOr<double> value = epsilon_at(std::exp(mid));
    if (!value.ok()) return value.status();
    if (*value <= epsilon) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return std::exp(hi);
}

absl::StatusOr<double> ExactEpsilonSingle(const CactusDensity& density,
                                          double a, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1), got ", delta));
  }
  absl::StatusOr<double> at_zero = DeltaOfEpsilonSingle(density, a, 0.0);
  if (!at_zero.ok()) return at_zero.status();
  if (*at_zero <= delta) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  for (int iter = 0; iter < 2000; ++iter) {
    absl::StatusOr<double> value = DeltaOfEpsilonSingle(density, a, hi);
    if (!value.ok()) return value.status();
    if (*value <= delta) break;
    lo = hi;
    hi *= 2.0;
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    absl::StatusOr<double> value = DeltaOfEpsilonSingle(density, a, mid);
    if (!value.ok()) return value.status();
    if (*value <= delta) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace cactus
