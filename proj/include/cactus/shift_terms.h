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

#ifndef CACTUS_SHIFT_TERMS_H_
#define CACTUS_SHIFT_TERMS_H_

#include <cmath>
#include <cstdlib>

namespace cactus {
namespace internal {

// Enumerates the finite part of the symmetric shift divergence
//
//   F_k(p) = (B_k + B_{-k}) / 2
//          = sum over terms  weight * (u - v) log(u / v)  +  TailCoefficient * p_N
//
// where each term has u = p[first] and v = r^power * p[second]. The core
// pairs (|i|, |i+k|) for -N < i < N-k carry weight 1/2; the pairs straddling
// the core boundary, (i, N) with N-k <= i < N, carry weight 1 and
// power = i + k - N. Requires 1 <= k <= N.
template <typename Visitor>
void ForEachShiftTerm(int N, int k, Visitor&& visit) {
  for (int i = -N + 1; i <= N - k - 1; ++i) {
    const int first = std::abs(i);
    const int second = std::abs(i + k);
    if (first != second) visit(0.5, first, second, 0);
  }
  for (int i = N - k; i <= N - 1; ++i) visit(1.0, i, N, i + k - N);
}

// Coefficient of p_N in F_k contributed by the two geometric tails,
// (1 - r^k) / (1 - r) * k log(1/r).
inline double TailCoefficient(double r, int k) {
  return -std::expm1(k * std::log(r)) / (1.0 - r) * k * -std::log(r);
}

}  // namespace internal
}  // namespace cactus

#endif  // CACTUS_SHIFT_TERMS_H_
