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

#ifndef CACTUS_SOLVER_H_
#define CACTUS_SOLVER_H_

#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "cactus/cost.h"
#include "cactus/density.h"

// Synthesis of the cactus distribution: minimize the worst-case shift KL
// divergence max_{1<=k<=n} F_k(p) over normalized weight vectors p whose
// expected noise cost stays within budget. F_k is jointly convex in p, so
// the program is convex; it is solved in epigraph form
//
//   minimize t  s.t.  F_k(p) <= t (k = 1..n),  a.p <= C,  s.p = 1,
//                     p_i >= floor_i,
//
// by a primal-dual interior-point method. Each Newton system is dense in the
// N+2 unknowns (p, t) and factored by Cholesky.

namespace cactus {

struct SynthesisProblem {
  CactusShape shape;
  // Any sensitivity is accepted; the solver works with NormalizeProblem(cost).
  CostModel cost;
};

// Checks the shape and cost model and the necessary feasibility condition
// c_{n,0} < C. Infeasibility is reported as kFailedPrecondition.
absl::Status ValidateProblem(const SynthesisProblem& problem);

struct SolverOptions {
  // Budget of Newton steps across all stages.
  int max_iterations = 2000;
  // Target bound on the epigraph suboptimality, in nats.
  double tolerance = 1e-8;
  // Absolute lower bound on every weight.
  double floor = 1e-300;
  // Weights are also kept above relative_floor * p_0.
  double relative_floor = 1e-12;
  // Barrier parameters mu for the successive stages, strictly decreasing.
  // Empty selects an adaptive schedule ending where (#constraints) * mu <=
  // tolerance / 10.
  std::vector<double> smoothing_schedule;
  // Standard deviation of the Gaussian warm start; 0 selects sqrt(C).
  double seed_sigma = 0.0;
};

absl::Status ValidateOptions(const SolverOptions& options);

struct SynthesisResult {
  CactusDensity density;
  // SupKl(density).
  double achieved_kl = 0.0;
  double achieved_cost = 0.0;
  // Primal-dual Newton steps taken.
  int iterations = 0;
  // F_k at the solution, k = 1..n.
  std::vector<double> certificate;
  bool converged = false;
  // Whether some weight sits within 1e-6 (relative) of its floor.
  bool floor_active = false;
  // Epigraph value t at the end of each barrier stage.
  std::vector<double> stage_objectives;
  // Normalization sum and cost slack at the returned point.
  double normalization_residual = 0.0;
  double cost_slack = 0.0;
  std::vector<std::string> warnings;
};

// Returns kFailedPrecondition when the problem is infeasible. Running out of
// iterations is not an error: the last iterate is returned with
// converged = false.
absl::StatusOr<SynthesisResult> Synthesize(const SynthesisProblem& problem,
                                           const SolverOptions& options = {});

struct ObjectiveValue {
  double value = 0.0;
  // Gradient of F_k at the active k, one entry per weight.
  std::vector<double> subgradient;
  // Smallest maximizing k.
  int active_k = 0;
};

// max_k F_k(p) and a subgradient for a strictly positive weight vector
// (normalization is not required).
absl::StatusOr<ObjectiveValue> ObjectiveAndSubgradient(
    const SynthesisProblem& problem, std::span<const double> weights);

// F_k(p) for k = 1..n.
absl::StatusOr<std::vector<double>> ShiftObjectives(
    const CactusShape& shape, std::span<const double> weights);

// Projection onto {s.p = 1, a.p <= C, p_i >= floor} in the inner product
// <u, v> = sum_i s_i u_i v_i, where s are the normalization coefficients.
// Points already in the set are returned unchanged.
absl::StatusOr<std::vector<double>> FeasibilityProject(
    std::span<const double> weights, const SynthesisProblem& problem,
    double floor = 0.0);

}  // namespace cactus

#endif  // CACTUS_SOLVER_H_
