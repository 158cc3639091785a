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

#ifndef CACTUS_DIVERGENCE_H_
#define CACTUS_DIVERGENCE_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "cactus/density.h"

// Divergences between a cactus density P and its translates T_a P, where
// (T_a P)(B) = P(B - a). All values are in nats.
//
// Every routine here splits the bi-infinite cell sum into an explicit core
// and two geometric tails that are summed in closed form, so no series is
// ever truncated.

namespace cactus {

// A shift a written as a = (k - delta) / n, where k is the cell containing
// a + 1/(2n) and delta lies in [0, 1].
struct ShiftDecomposition {
  int64_t k = 0;
  double delta = 0.0;
};

ShiftDecomposition DecomposeShift(int n, double a);

// Log-moments alpha(lambda) = log E_P[(dP/dQ)^lambda] of a privacy loss, one
// per integer order.
struct MomentsCurve {
  std::vector<int> lambdas;
  std::vector<double> alphas;
  double shift = 1.0;
  std::optional<double> subsampling_q;
};

// Rejects densities with a zero weight; those give infinite divergence.
absl::Status CheckStrictlyPositive(const CactusDensity& density);

// (B_k + B_{-k}) / 2 with B_k = sum_i p_i log(p_i / p_{i+k}); for a
// symmetric density this equals D(P || T_{k/n} P). Accepts 0 <= |k| <= N.
absl::StatusOr<double> BkSymmetric(const CactusDensity& density, int k);

// sup_{|a| <= 1} D(P || T_a P), attained on the grid shifts k/n, k = 1..n.
absl::StatusOr<double> SupKl(const CactusDensity& density);

// D(P || T_a P) for |a| <= 1, interpolating linearly between the two
// neighbouring grid shifts.
absl::StatusOr<double> KlAtShift(const CactusDensity& density, double a);

// log sum_i p_i (p_i / p_{i+k})^lambda for a grid-aligned shift a = k/n.
absl::StatusOr<double> LogMgf(const CactusDensity& density, double a,
                              int lambda);

// Hockey-stick divergence E_P[(1 - e^epsilon dT_aP/dP)^+], the exact delta
// of a single release at privacy level epsilon, for a grid-aligned shift.
absl::StatusOr<double> DeltaOfEpsilonSingle(const CactusDensity& density,
                                            double a, double epsilon);

// KL divergence between N(0, sigma^2) and N(s, sigma^2).
absl::StatusOr<double> GaussianKl(double s, double sigma);

// Returns k with a == k/n up to rounding, or an error for off-grid shifts.
absl::StatusOr<int64_t> GridShiftIndex(int n, double a);

}  // namespace cactus

#endif  // CACTUS_DIVERGENCE_H_
