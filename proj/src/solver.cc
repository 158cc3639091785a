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

#include "cactus/solver.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "cactus/cost.h"
#include "cactus/density.h"
#include "cactus/divergence.h"
#include "cactus/shift_terms.h"

namespace cactus {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// A stage with barrier parameter mu is done once every KKT residual is
// below kCenteringFactor * mu.
constexpr double kCenteringFactor = 10.0;
// mu <- min(kMuDecrease * mu, mu^1.5) between stages.
constexpr double kMuDecrease = 0.2;
constexpr double kFractionToBoundary = 0.99;
constexpr double kDualSafeguard = 1e10;
constexpr int kMaxBacktracks = 60;
// A stage that needs more Newton steps than this is abandoned.
constexpr int kMaxStageIterations = 200;

std::vector<double> NormalizationCoefficients(const CactusShape& shape) {
  std::vector<double> s(shape.N + 1, 2.0);
  s[0] = 1.0;
  s[shape.N] = 2.0 / (1.0 - shape.r);
  return s;
}

// Evaluates the n shift objectives F_k and their derivatives. Derivatives
// are taken in the scaled variables q_i = p_i / p_i^(current), which turns
// the Hessian of each (u - v) log(u / v) term into (u + v)[[1,-1],[-1,1]].
class ShiftSystem {
 public:
  explicit ShiftSystem(const CactusShape& shape)
      : n_(shape.n), N_(shape.N), r_(shape.r), log_r_(std::log(shape.r)) {
    r_powers_.resize(n_ + 1);
    for (int m = 0; m <= n_; ++m) r_powers_[m] = std::pow(r_, m);
    tail_.resize(n_ + 1, 0.0);
    for (int k = 1; k <= n_; ++k) tail_[k] = internal::TailCoefficient(r_, k);
  }

  int n() const { return n_; }
  int N() const { return N_; }

  void Values(std::span<const double> p, std::span<double> values) const {
    std::vector<double> logs(p.size());
    for (size_t i = 0; i < p.size(); ++i) logs[i] = std::log(p[i]);
    for (int k = 1; k <= n_; ++k) {
      double total = 0.0;
      internal::ForEachShiftTerm(N_, k, [&](double w, int a, int b, int m) {
        const double u = p[a];
        const double v = p[b] * r_powers_[m];
        total += w * (u - v) * (logs[a] - logs[b] - m * log_r_);
      });
      values[k - 1] = total + p[N_] * tail_[k];
    }
  }

  // Unscaled gradient of F_k.
  std::vector<double> Gradient(std::span<const double> p, int k) const {
    std::vector<double> grad(p.size(), 0.0);
    internal::ForEachShiftTerm(N_, k, [&](double w, int a, int b, int m) {
      const double u = p[a];
      const double v = p[b] * r_powers_[m];
      const double log_ratio = std::log(u) - std::log(v);
      grad[a] += w * (log_ratio + 1.0 - v / u);
      grad[b] += w * r_powers_[m] * (-log_ratio + 1.0 - u / v);
    });
    grad[N_] += tail_[k];
    return grad;
  }

  // Writes scaled gradients D grad F_k into column k-1 of `gradients` (rows
  // 0..N) and adds sum_k hessian_weights[k-1] * D hess F_k D to the lower
  // triangle of `hessian`.
  void ScaledDerivatives(std::span<const double> p,
                         std::span<const double> hessian_weights,
                         MatrixXd& gradients, MatrixXd& hessian) const {
    std::vector<double> logs(p.size());
    for (size_t i = 0; i < p.size(); ++i) logs[i] = std::log(p[i]);
    for (int k = 1; k <= n_; ++k) {
      auto column = gradients.col(k - 1);
      column.setZero();
      const double hw = hessian_weights[k - 1];
      internal::ForEachShiftTerm(N_, k, [&](double w, int a, int b, int m) {
        const double u = p[a];
        const double v = p[b] * r_powers_[m];
        const double log_ratio = logs[a] - logs[b] - m * log_r_;
        column[a] += w * (u * log_ratio + u - v);
        column[b] += w * (-v * log_ratio + v - u);
        const double h = hw * w * (u + v);
        hessian(a, a) += h;
        hessian(b, b) += h;
        if (a > b) {
          hessian(a, b) -= h;
        } else {
          hessian(b, a) -= h;
        }
      });
      column[N_] += p[N_] * tail_[k];
    }
  }

 private:
  int n_;
  int N_;
  double r_;
  double log_r_;
  std::vector<double> r_powers_;
  std::vector<double> tail_;
};

// Inequalities of the epigraph program, c_j(p, t) >= 0:
//   j < n:         t - F_{j+1}(p)
//   j = n:         C - a.p
//   j = n + 1 + i: p_i - rho p_0 - floor   (i = 0..N; for i = 0 the p_0
//                  coefficient is 1 - rho)
// Gradients are taken in the scaled variables delta_i = dp_i / p_i.
class ConstraintSet {
 public:
  ConstraintSet(const CactusShape& shape, std::vector<double> cost_coeffs,
                double budget, double floor, double relative_floor)
      : system_(shape),
        N_(shape.N),
        n_(shape.n),
        norm_(NormalizationCoefficients(shape)),
        cost_(std::move(cost_coeffs)),
        budget_(budget),
        floor_(floor),
        relative_floor_(relative_floor) {}

  int n() const { return n_; }
  int N() const { return N_; }
  int size() const { return n_ + 2 + N_; }
  int FloorIndex(int i) const { return n_ + 1 + i; }
  const ShiftSystem& system() const { return system_; }
  const std::vector<double>& norm() const { return norm_; }
  const std::vector<double>& cost() const { return cost_; }
  double relative_floor() const { return relative_floor_; }

  double Cost(std::span<const double> p) const {
    return std::inner_product(cost_.begin(), cost_.end(), p.begin(), 0.0);
  }
  double Normalization(std::span<const double> p) const {
    return std::inner_product(norm_.begin(), norm_.end(), p.begin(), 0.0);
  }
  double FloorLevel(std::span<const double> p, int i) const {
    return i == 0 ? floor_ : relative_floor_ * p[0] + floor_;
  }

  // Fills c (size()) and the shift objectives; false if some weight is not
  // positive or a value is not finite.
  bool Evaluate(std::span<const double> p, double t, std::vector<double>& c,
                std::vector<double>& values) const {
    for (int i = 0; i <= N_; ++i) {
      if (!(p[i] > 0.0) || !std::isfinite(p[i])) return false;
    }
    values.resize(n_);
    system_.Values(p, values);
    c.resize(size());
    for (int k = 0; k < n_; ++k) {
      if (!std::isfinite(values[k])) return false;
      c[k] = t - values[k];
    }
    c[n_] = budget_ - Cost(p);
    c[FloorIndex(0)] = (1.0 - relative_floor_) * p[0] - floor_;
    for (int i = 1; i <= N_; ++i) {
      c[FloorIndex(i)] = p[i] - relative_floor_ * p[0] - floor_;
    }
    return std::isfinite(t);
  }

 private:
  ShiftSystem system_;
  int N_;
  int n_;
  std::vector<double> norm_;
  std::vector<double> cost_;
  double budget_;
  double floor_;
  double relative_floor_;
};

// Primal-dual iterate. Slacks s stand in for the constraint values, so the
// nonlinear constraints may be violated (c != s) away from the solution.
struct Iterate {
  std::vector<double> p;
  double t = 0.0;
  std::vector<double> s;
  std::vector<double> lambda;
  // Multiplier of the normalization equality.
  double eta = 0.0;
  // Cached at (p, t).
  std::vector<double> c;
  std::vector<double> values;
};

struct Direction {
  VectorXd dy;  // (delta_0..delta_N, dt)
  double eta = 0.0;
  std::vector<double> ds;
  std::vector<double> dlambda;
};

// Newton system of the perturbed KKT conditions, reduced to (delta, dt):
//
//   [ M    a ] [dy ]   [ -e_t + sum_j w_j grad c_j ]
//   [ a^T  0 ] [eta] = [ 1 - s.p                   ]
//
// with M = sum_k lambda_k D hess F_k D + sum_j (lambda_j / s_j) grad c_j
// grad c_j^T and w_j = (target_j - lambda_j (c_j - s_j)) / s_j.
class KktSystem {
 public:
  explicit KktSystem(const ConstraintSet& constraints)
      : constraints_(constraints) {}

  bool Factor(const Iterate& x) {
    const int N = constraints_.N();
    const int n = constraints_.n();
    const int dim = N + 2;
    hessian_.setZero(dim, dim);
    columns_.resize(dim, n + 1);
    std::vector<double> weights(x.lambda.begin(), x.lambda.begin() + n);
    constraints_.system().ScaledDerivatives(x.p, weights, columns_, hessian_);
    gradients_ = columns_.topLeftCorner(N + 1, n);
    for (int k = 0; k < n; ++k) {
      auto column = columns_.col(k);
      column.head(N + 1) *= -1.0;
      column(N + 1) = 1.0;
      column *= std::sqrt(x.lambda[k] / x.s[k]);
    }
    scaled_cost_.resize(N + 1);
    for (int i = 0; i <= N; ++i) {
      scaled_cost_(i) = constraints_.cost()[i] * x.p[i];
    }
    auto cost_column = columns_.col(n);
    cost_column.head(N + 1) = -std::sqrt(x.lambda[n] / x.s[n]) * scaled_cost_;
    cost_column(N + 1) = 0.0;

    const double rho = constraints_.relative_floor();
    const double lead = rho * x.p[0];
    {
      const int j = constraints_.FloorIndex(0);
      const double g0 = (1.0 - rho) * x.p[0];
      hessian_(0, 0) += x.lambda[j] / x.s[j] * g0 * g0;
    }
    for (int i = 1; i <= N; ++i) {
      const int j = constraints_.FloorIndex(i);
      const double w = x.lambda[j] / x.s[j];
      hessian_(i, i) += w * x.p[i] * x.p[i];
      hessian_(i, 0) -= w * x.p[i] * lead;
      hessian_(0, 0) += w * lead * lead;
    }
    hessian_.selfadjointView<Eigen::Lower>().rankUpdate(columns_);

    llt_.compute(hessian_);
    double shift = 0.0;
    while (llt_.info() != Eigen::Success) {
      shift = shift == 0.0 ? 1e-14 * hessian_.diagonal().cwiseAbs().maxCoeff()
                           : 10.0 * shift;
      if (!std::isfinite(shift) || shift == 0.0) return false;
      MatrixXd shifted = hessian_;
      shifted.diagonal().array() += shift;
      llt_.compute(shifted);
    }

    equality_.setZero(dim);
    for (int i = 0; i <= N; ++i) {
      equality_(i) = constraints_.norm()[i] * x.p[i];
    }
    equality_solve_ = llt_.solve(equality_);
    return equality_solve_.allFinite();
  }

  // Directional derivatives grad c_j . dy for every constraint.
  std::vector<double> ConstraintDerivatives(const Iterate& x,
                                            const VectorXd& dy) const {
    const int N = constraints_.N();
    const int n = constraints_.n();
    std::vector<double> dc(constraints_.size());
    const VectorXd shift_part = gradients_.transpose() * dy.head(N + 1);
    for (int k = 0; k < n; ++k) dc[k] = dy(N + 1) - shift_part(k);
    dc[n] = -scaled_cost_.dot(dy.head(N + 1));
    const double rho = constraints_.relative_floor();
    dc[constraints_.FloorIndex(0)] = (1.0 - rho) * x.p[0] * dy(0);
    for (int i = 1; i <= N; ++i) {
      dc[constraints_.FloorIndex(i)] = x.p[i] * dy(i) - rho * x.p[0] * dy(0);
    }
    return dc;
  }

  Direction Solve(const Iterate& x, const std::vector<double>& targets) const {
    const int N = constraints_.N();
    const int n = constraints_.n();
    const int m = constraints_.size();
    std::vector<double> w(m);
    for (int j = 0; j < m; ++j) {
      w[j] = (targets[j] - x.lambda[j] * (x.c[j] - x.s[j])) / x.s[j];
    }
    VectorXd rhs = VectorXd::Zero(N + 2);
    Eigen::Map<const VectorXd> wk(w.data(), n);
    rhs.head(N + 1) = -gradients_ * wk - w[n] * scaled_cost_;
    rhs(N + 1) = -1.0 + wk.sum();
    const double rho = constraints_.relative_floor();
    rhs(0) += w[constraints_.FloorIndex(0)] * (1.0 - rho) * x.p[0];
    for (int i = 1; i <= N; ++i) {
      const double wi = w[constraints_.FloorIndex(i)];
      rhs(i) += wi * x.p[i];
      rhs(0) -= wi * rho * x.p[0];
    }

    const VectorXd u = llt_.solve(rhs);
    const double residual = constraints_.Normalization(x.p) - 1.0;
    Direction d;
    d.eta = (equality_.dot(u) + residual) / equality_.dot(equality_solve_);
    d.dy = u - d.eta * equality_solve_;
    const std::vector<double> dc = ConstraintDerivatives(x, d.dy);
    d.ds.resize(m);
    d.dlambda.resize(m);
    for (int j = 0; j < m; ++j) {
      d.ds[j] = dc[j] + (x.c[j] - x.s[j]);
      d.dlambda[j] = (targets[j] - x.s[j] * x.lambda[j] -
                      x.lambda[j] * d.ds[j]) / x.s[j];
    }
    return d;
  }

  // Dual residual e_t - sum_j lambda_j grad c_j + eta a, infinity norm.
  double DualResidual(const Iterate& x) const {
    const int N = constraints_.N();
    const int n = constraints_.n();
    Eigen::Map<const VectorXd> lk(x.lambda.data(), n);
    VectorXd r(N + 2);
    r.head(N + 1) = gradients_ * lk + x.lambda[n] * scaled_cost_ +
                    x.eta * equality_;
    r(N + 1) = 1.0 - lk.sum();
    const double rho = constraints_.relative_floor();
    r(0) -= x.lambda[constraints_.FloorIndex(0)] * (1.0 - rho) * x.p[0];
    for (int i = 1; i <= N; ++i) {
      const double li = x.lambda[constraints_.FloorIndex(i)];
      r(i) -= li * x.p[i];
      r(0) += li * rho * x.p[0];
    }
    return r.cwiseAbs().maxCoeff();
  }

 private:
  const ConstraintSet& constraints_;
  MatrixXd hessian_;
  MatrixXd columns_;
  MatrixXd gradients_;
  VectorXd scaled_cost_;
  VectorXd equality_;
  VectorXd equality_solve_;
  Eigen::LLT<MatrixXd> llt_;
};

// Largest step in (0, 1] keeping every entry of v + alpha dv above
// (1 - fraction) v.
double StepToBoundary(const std::vector<double>& v,
                      const std::vector<double>& dv, double fraction) {
  double alpha = 1.0;
  for (size_t j = 0; j < v.size(); ++j) {
    if (dv[j] < 0.0) alpha = std::min(alpha, -fraction * v[j] / dv[j]);
  }
  return alpha;
}


double PrimalResidual(const Iterate& x) {
  double worst = 0.0;
  for (size_t j = 0; j < x.s.size(); ++j) {
    worst = std::max(worst, std::abs(x.c[j] - x.s[j]));
  }
  return worst;
}

// Every KKT residual of the barrier subproblem is below kCenteringFactor *
// mu. Slacks of the shift constraints are differences of O(t) numbers, so
// their updates carry rounding errors of order eps * t that the multiplier
// update magnifies by lambda / s; the dual test allows for that noise.
bool StageCentered(const KktSystem& kkt, const ConstraintSet& constraints,
                   const Iterate& x, double mu) {
  const double limit = kCenteringFactor * mu;
  if (PrimalResidual(x) > limit) return false;
  if (std::abs(constraints.Normalization(x.p) - 1.0) > limit) return false;
  double noise = 0.0;
  for (size_t j = 0; j < x.s.size(); ++j) {
    if (std::abs(x.s[j] * x.lambda[j] - mu) > limit) return false;
    if (static_cast<int>(j) < constraints.n()) {
      noise = std::max(noise, x.lambda[j] / x.s[j]);
    }
  }
  noise *= std::numeric_limits<double>::epsilon() * (1.0 + std::abs(x.t));
  return kkt.DualResidual(x) <= std::max(limit, noise);
}

// Strictly feasible start: a mixture of the Gaussian warm start, a small
// uniform component that keeps every weight well above its floor, and the
// point mass at cell 0, which is the cheapest normalized vector.
absl::StatusOr<std::vector<double>> InitialWeights(
    const CactusShape& shape, const std::vector<double>& cost_coeffs,
    double budget, double seed_sigma) {
  absl::StatusOr<CactusDensity> gaussian = GaussianInit(shape, seed_sigma);
  if (!gaussian.ok()) return gaussian.status();
  const std::vector<double> s = NormalizationCoefficients(shape);
  const double uniform_level =
      1.0 / std::accumulate(s.begin(), s.end(), 0.0);
  auto cost_of = [&](std::span<const double> p) {
    return std::inner_product(cost_coeffs.begin(), cost_coeffs.end(),
                              p.begin(), 0.0);
  };
  const auto g = gaussian->weights();
  const std::vector<double> uniform(shape.N + 1, uniform_level);
  const double c0 = cost_coeffs[0];
  const double cg = cost_of(g);
  const double cu = cost_of(uniform);
  const double room = budget - c0;

  const double theta_u = std::min(1e-6, 0.05 * room / (cu - c0));
  double theta_g = 1.0 - theta_u;
  if (cg > c0) {
    theta_g = std::min(theta_g, (0.9 * room - theta_u * (cu - c0)) / (cg - c0));
  }
  std::vector<double> p(shape.N + 1);
  for (int i = 0; i <= shape.N; ++i) {
    p[i] = theta_g * g[i] + theta_u * uniform[i];
  }
  p[0] += 1.0 - theta_g - theta_u;
  return p;
}

std::string ParameterGuidance(const CactusShape& shape) {
  const double theta = (1.0 - shape.r) * shape.N;
  if (theta > 1e3 || theta < 1e-2) {
    return absl::StrFormat(
        "tail ratio r=%g is far from the 1 - theta/N regime (theta=%g); the "
        "geometric tail may dominate the solution",
        shape.r, theta);
  }
  return "";
}

absl::Status ValidateWeights(const CactusShape& shape,
                             std::span<const double> weights) {
  if (weights.size() != static_cast<size_t>(shape.N) + 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "expected N+1=", shape.N + 1, " weights, got ", weights.size()));
  }
  for (size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
      return absl::InvalidArgumentError(absl::StrCat(
          "infeasible point: weight p_", i, " = ", weights[i],
          " must be strictly positive"));
    }
  }
  return absl::OkStatus();
}

}  // namespace

absl::Status ValidateProblem(const SynthesisProblem& problem) {
  if (absl::Status s = ValidateShape(problem.shape); !s.ok()) return s;
  if (absl::Status s = ValidateCostModel(problem.cost); !s.ok()) return s;
  const double c0 = CellCost(problem.cost, problem.shape, 0);
  if (!(c0 < problem.cost.budget)) {
    return absl::FailedPreconditionError(absl::StrFormat(
        "infeasible: the center-cell cost c_{n,0} = %.17g must be below the "
        "budget C = %.17g",
        c0, problem.cost.budget));
  }
  return absl::OkStatus();
}

absl::Status ValidateOptions(const SolverOptions& options) {
  if (options.max_iterations < 1) {
    return absl::InvalidArgumentError("max_iterations must be positive");
  }
  if (!(options.tolerance > 0.0)) {
    return absl::InvalidArgumentError("tolerance must be positive");
  }
  if (!(options.floor > 0.0) || !(options.relative_floor >= 0.0) ||
      !(options.relative_floor < 1.0)) {
    return absl::InvalidArgumentError(
        "floor must be positive and relative_floor in [0, 1)");
  }
  for (size_t j = 0; j < options.smoothing_schedule.size(); ++j) {
    if (!(options.smoothing_schedule[j] > 0.0) ||
        (j > 0 &&
         !(options.smoothing_schedule[j] < options.smoothing_schedule[j - 1]))) {
      return absl::InvalidArgumentError(
          "smoothing_schedule must be positive and strictly decreasing");
    }
  }
  if (!(options.seed_sigma >= 0.0)) {
    return absl::InvalidArgumentError("seed_sigma must be nonnegative");
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<double>> ShiftObjectives(
    const CactusShape& shape, std::span<const double> weights) {
  if (absl::Status s = ValidateShape(shape); !s.ok()) return s;
  if (absl::Status s = ValidateWeights(shape, weights); !s.ok()) return s;
  std::vector<double> values(shape.n);
  ShiftSystem(shape).Values(weights, values);
  return values;
}

absl::StatusOr<ObjectiveValue> ObjectiveAndSubgradient(
    const SynthesisProblem& problem, std::span<const double> weights) {
  absl::StatusOr<std::vector<double>> values =
      ShiftObjectives(problem.shape, weights);
  if (!values.ok()) return values.status();
  const auto best = std::max_element(values->begin(), values->end());
  ObjectiveValue out;
  out.value = *best;
  out.active_k = static_cast<int>(best - values->begin()) + 1;
  out.subgradient = ShiftSystem(problem.shape).Gradient(weights, out.active_k);
  return out;
}

absl::StatusOr<std::vector<double>> FeasibilityProject(
    std::span<const double> weights, const SynthesisProblem& problem,
    double floor) {
  if (absl::Status s = ValidateShape(problem.shape); !s.ok()) return s;
  if (absl::Status s = ValidateCostModel(problem.cost); !s.ok()) return s;
  const CactusShape& shape = problem.shape;
  if (weights.size() != static_cast<size_t>(shape.N) + 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "expected N+1=", shape.N + 1, " weights, got ", weights.size()));
  }
  absl::StatusOr<CellCostTable> table = CellCostTable::Build(problem.cost, shape);
  if (!table.ok()) return table.status();
  const std::vector<double> a = table->Coefficients();
  const std::vector<double> s = NormalizationCoefficients(shape);
  const double budget = problem.cost.budget;
  const int size = shape.N + 1;

  auto dot = [](const std::vector<double>& x, std::span<const double> y) {
    return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
  };
  const bool above_floor = std::all_of(weights.begin(), weights.end(),
                                       [&](double w) { return w >= floor; });
  if (above_floor && std::abs(dot(s, weights) - 1.0) <= 1e-15 &&
      dot(a, weights) <= budget) {
    return std::vector<double>(weights.begin(), weights.end());
  }

  // Cheapest point: everything at the floor except cell 0.
  const double floor_mass = floor * std::accumulate(s.begin(), s.end(), 0.0);
  const double cheapest =
      floor * std::accumulate(a.begin() + 1, a.end(), 0.0) +
      a[0] * (1.0 - (floor_mass - floor));
  if (floor_mass > 1.0 || cheapest > budget) {
    return absl::FailedPreconditionError(absl::StrFormat(
        "infeasible: no weights above floor %g meet budget C = %.17g (the "
        "cheapest normalized point costs %.17g)",
        floor, budget, cheapest));
  }

  // x_i(y, nu) = max(floor, p_i - y - nu a_i / s_i).
  std::vector<double> x(size);
  auto fill = [&](double y, double nu) {
    for (int i = 0; i < size; ++i) {
      x[i] = std::max(floor, weights[i] - y - nu * a[i] / s[i]);
    }
  };
  auto solve_shift = [&](double nu) {
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    for (int i = 0; i < size; ++i) {
      const double base = weights[i] - nu * a[i] / s[i];
      hi = std::max(hi, base - floor);
      lo = std::min(lo, base - floor);
    }
    lo -= 1.0;
    for (int iter = 0; iter < 200 && hi - lo > 0.0; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      fill(mid, nu);
      if (dot(s, x) > 1.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    fill(lo, nu);
    // Absorb the rounding residue in the center cell, whose coefficient is 1.
    x[0] = std::max(floor, x[0] + (1.0 - dot(s, x)));
  };

  solve_shift(0.0);
  if (dot(a, x) > budget) {
    double nu_lo = 0.0;
    double nu_hi = 1.0;
    for (int iter = 0; iter < 400; ++iter) {
      solve_shift(nu_hi);
      if (dot(a, x) <= budget) break;
      nu_lo = nu_hi;
      nu_hi *= 2.0;
    }
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = 0.5 * (nu_lo + nu_hi);
      if (mid == nu_lo || mid == nu_hi) break;
      solve_shift(mid);
      if (dot(a, x) > budget) {
        nu_lo = mid;
      } else {
        nu_hi = mid;
      }
    }
    solve_shift(nu_hi);
  }
  return x;
}

absl::StatusOr<SynthesisResult> Synthesize(const SynthesisProblem& problem,
                                           const SolverOptions& options) {
  if (absl::Status s = ValidateProblem(problem); !s.ok()) return s;
  if (absl::Status s = ValidateOptions(options); !s.ok()) return s;
  const CactusShape& shape = problem.shape;
  const CostModel cost = NormalizeProblem(problem.cost);
  absl::StatusOr<CellCostTable> table = CellCostTable::Build(cost, shape);
  if (!table.ok()) return table.status();
  const double budget = cost.budget;

  const ConstraintSet constraints(shape, table->Coefficients(), budget,
                                  options.floor, options.relative_floor);
  const int m = constraints.size();
  const double seed_sigma =
      options.seed_sigma > 0.0 ? options.seed_sigma : std::sqrt(budget);
  absl::StatusOr<std::vector<double>> start =
      InitialWeights(shape, table->Coefficients(), budget, seed_sigma);
  if (!start.ok()) return start.status();

  Iterate x;
  x.p = *std::move(start);
  x.values.resize(shape.n);
  constraints.system().Values(x.p, x.values);
  x.t = 1.1 * *std::max_element(x.values.begin(), x.values.end()) + 1e-3;
  if (!constraints.Evaluate(x.p, x.t, x.c, x.values) ||
      *std::min_element(x.c.begin(), x.c.end()) <= 0.0) {
    return absl::InternalError(
        "could not construct a strictly feasible starting point");
  }
  // Duals on the central path of the starting point, scaled so that the
  // shift multipliers sum to one (dual feasibility in t).
  x.s = x.c;
  double inverse_sum = 0.0;
  for (int k = 0; k < shape.n; ++k) inverse_sum += 1.0 / x.s[k];
  double mu = 1.0 / inverse_sum;
  x.lambda.resize(m);
  for (int j = 0; j < m; ++j) x.lambda[j] = mu / x.s[j];

  const std::vector<double>& schedule = options.smoothing_schedule;
  const double final_mu = schedule.empty()
                              ? options.tolerance / (10.0 * m)
                              : schedule.back();
  if (!schedule.empty()) mu = schedule.front();
  size_t stage = 0;

  SynthesisResult result{.density = *GaussianInit(shape, seed_sigma),
                         .certificate = {},
                         .stage_objectives = {},
                         .warnings = {}};
  KktSystem kkt(constraints);
  int iterations = 0;
  bool converged = false;
  Iterate trial;
  std::vector<double> targets(m);
  while (true) {
    bool centered = false;
    int stage_iterations = 0;
    while (iterations < options.max_iterations) {
      if (!kkt.Factor(x)) break;
      if (StageCentered(kkt, constraints, x, mu)) {
        centered = true;
        break;
      }
      if (++stage_iterations > kMaxStageIterations) break;

      std::fill(targets.begin(), targets.end(), mu);
      const Direction d = kkt.Solve(x, targets);
      if (!d.dy.allFinite()) break;
      const double fraction = std::max(kFractionToBoundary, 1.0 - mu);
      double alpha = std::min(StepToBoundary(x.s, d.ds, fraction),
                              StepToBoundary(x.lambda, d.dlambda, fraction));
      for (int i = 0; i <= shape.N; ++i) {
        if (d.dy(i) < 0.0) alpha = std::min(alpha, -fraction / d.dy(i));
      }
      trial.p.resize(shape.N + 1);
      bool accepted = false;
      for (int attempt = 0; attempt < kMaxBacktracks; ++attempt) {
        for (int i = 0; i <= shape.N; ++i) {
          trial.p[i] = x.p[i] * (1.0 + alpha * d.dy(i));
        }
        trial.t = x.t + alpha * d.dy(shape.N + 1);
        if (constraints.Evaluate(trial.p, trial.t, trial.c, trial.values)) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;
      x.p.swap(trial.p);
      x.t = trial.t;
      x.c.swap(trial.c);
      x.values.swap(trial.values);
      x.eta += alpha * (d.eta - x.eta);
      for (int j = 0; j < m; ++j) {
        x.s[j] += alpha * d.ds[j];
        x.lambda[j] += alpha * d.dlambda[j];
        // Keep each multiplier within a bounded factor of its central value.
        x.lambda[j] = std::clamp(x.lambda[j], mu / (kDualSafeguard * x.s[j]),
                                 kDualSafeguard * mu / x.s[j]);
      }
      ++iterations;
    }
    result.stage_objectives.push_back(x.t);
    if (!centered) break;
    if (mu <= final_mu) {
      converged = true;
      break;
    }
    if (schedule.empty()) {
      mu = std::max(final_mu, std::min(kMuDecrease * mu, std::pow(mu, 1.5)));
    } else {
      mu = schedule[++stage];
    }
  }
  result.iterations = iterations;
  result.converged = converged;

  const double sum = constraints.Normalization(x.p);
  std::vector<double> weights = x.p;
  for (double& w : weights) w /= sum;
  absl::StatusOr<CactusDensity> density =
      CactusDensity::Create(shape, std::move(weights));
  if (!density.ok()) return density.status();
  result.density = *std::move(density);

  absl::StatusOr<double> kl = SupKl(result.density);
  if (!kl.ok()) return kl.status();
  result.achieved_kl = *kl;
  absl::StatusOr<double> achieved_cost = ExpectedCost(result.density, *table);
  if (!achieved_cost.ok()) return achieved_cost.status();
  result.achieved_cost = *achieved_cost;
  result.cost_slack = budget - result.achieved_cost;
  result.normalization_residual =
      NormalizationSum(result.density.weights(), shape.r) - 1.0;
  result.certificate.resize(shape.n);
  constraints.system().Values(result.density.weights(), result.certificate);

  const auto p = result.density.weights();
  for (int i = 0; i <= shape.N; ++i) {
    if (p[i] <= (1.0 + 1e-6) * constraints.FloorLevel(p, i)) {
      result.floor_active = true;
      break;
    }
  }
  if (std::string hint = ParameterGuidance(shape); !hint.empty()) {
    result.warnings.push_back(std::move(hint));
  }
  if (!result.converged) {
    result.warnings.push_back(absl::StrCat(
        "solver stopped after ", iterations,
        " Newton steps without reaching the requested tolerance"));
  }
  return result;
}

}  // namespace cactus

