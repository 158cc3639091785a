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

#ifndef CACTUS_ACCOUNTANT_H_
#define CACTUS_ACCOUNTANT_H_

#include <cstdint>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "cactus/density.h"
#include "cactus/divergence.h"

// Moments accountant for T-fold composition of an additive mechanism whose
// neighbouring outputs differ by a unit shift. A step's privacy loss has
// log-moments alpha(lambda); after T steps
//
//   epsilon(delta) = min_lambda (T alpha(lambda) + log(1/delta)) / lambda.

namespace cactus {

inline constexpr int kDefaultLambdaMax = 32;

struct CompositionQuery {
  double delta = 1e-3;
  int64_t compositions = 1;
  // Poisson subsampling rate; 1 means every record takes part in each step.
  double q = 1.0;
  int lambda_max = kDefaultLambdaMax;
};

// 0 < delta <= 1, compositions >= 1, 0 < q <= 1, lambda_max >= 1.
absl::Status ValidateQuery(const CompositionQuery& query);

struct PrivacyReport {
  CompositionQuery query;
  double epsilon = 0.0;
  int argmin_lambda = 1;
  MomentsCurve curve;
};

// alpha(lambda) = LogMgf(density, 1, lambda) for lambda = 1..lambda_max.
// Orders whose moment is unbounded or overflows are dropped from the end of
// the curve; failing already at lambda = 1 is kFailedPrecondition.
absl::StatusOr<MomentsCurve> MechanismMoments(const CactusDensity& density,
                                              int lambda_max);

// Moments of the subsampled mechanism: the larger of the two directional
// log-moments between P and the mixture (1 - q) P + q T_1 P.
absl::StatusOr<MomentsCurve> SubsampledMoments(const CactusDensity& density,
                                               double q, int lambda_max);

// alpha(lambda) = lambda (lambda + 1) / (2 sigma^2), unit sensitivity.
absl::StatusOr<MomentsCurve> GaussianMoments(double sigma, int lambda_max);

// Subsampled Gaussian baseline, same mixture model as SubsampledMoments.
// One direction is an exact binomial sum; the other is integrated
// numerically.
absl::StatusOr<MomentsCurve> SubsampledGaussianMoments(double sigma, double q,
                                                       int lambda_max);

// Uses the stored orders with lambda <= query.lambda_max.
absl::StatusOr<PrivacyReport> ComposeEpsilon(const MomentsCurve& curve,
                                             const CompositionQuery& query);

// Smallest delta whose composed epsilon is at most `epsilon`, by bisection
// on ComposeEpsilon to within 1e-12 in delta. Returns 1 when even delta = 1
// does not reach `epsilon`.
absl::StatusOr<double> ComposeDelta(const MomentsCurve& curve,
                                    int64_t compositions, double epsilon,
                                    int lambda_max = kDefaultLambdaMax);

// Exact single-release epsilon at level delta for a grid-aligned shift a,
// solving DeltaOfEpsilonSingle(density, a, epsilon) = delta by bisection.
absl::StatusOr<double> ExactEpsilonSingle(const CactusDensity& density,
                                          double a, double delta);

}  // namespace cactus

#endif  // CACTUS_ACCOUNTANT_H_
