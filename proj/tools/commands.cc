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

#include "commands.h"

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "cactus/accountant.h"
#include "cactus/cost.h"
#include "cactus/density.h"
#include "cactus/divergence.h"
#include "cactus/mechanism_io.h"
#include "cactus/solver.h"

namespace cactus::cli {
namespace {

struct ShapeFlags {
  int n = 200;
  int N = 1600;
  double r = 0.9;
};

struct CostFlags {
  std::string family = "quadratic";
  double alpha = 2.0;
  double beta = 1.0;
  double budget = 0.25;
  double sensitivity = 1.0;
};

struct SolverFlags {
  int max_iterations = SolverOptions().max_iterations;
  double tolerance = SolverOptions().tolerance;
  double floor = SolverOptions().floor;
  double relative_floor = SolverOptions().relative_floor;
  std::vector<double> schedule;
  double seed_sigma = 0.0;
};

struct SynthConfig {
  ShapeFlags shape;
  CostFlags cost;
  SolverFlags solver;
  std::string output;
};

struct CompareConfig {
  ShapeFlags shape{100, 800, 0.95};
  SolverFlags solver;
  std::vector<double> sigmas;
  std::string output;
};

struct AccountConfig {
  std::string mechanism;
  double delta = 1e-3;
  std::vector<int64_t> compositions;
  int64_t max_compositions = 0;
  double q = 1.0;
  int lambda_max = kDefaultLambdaMax;
  bool gaussian = false;
  double gaussian_sigma = 0.0;
  std::string output;
  std::string report;
  std::string curve;
};

struct SampleConfig {
  std::string mechanism;
  int64_t count = -1;
  uint64_t seed = 0;
  std::string output;
};

Json ShapeJson(const ShapeFlags& f) {
  Json j = Json::object();
  j["n"] = f.n;
  j["N"] = f.N;
  j["r"] = f.r;
  return j;
}

Json SolverJson(const SolverFlags& f) {
  Json j = Json::object();
  j["max_iterations"] = f.max_iterations;
  j["tolerance"] = f.tolerance;
  j["floor"] = f.floor;
  j["relative_floor"] = f.relative_floor;
  j["schedule"] = f.schedule;
  j["seed_sigma"] = f.seed_sigma;
  return j;
}

SolverOptions ToOptions(const SolverFlags& f) {
  SolverOptions options;
  options.max_iterations = f.max_iterations;
  options.tolerance = f.tolerance;
  options.floor = f.floor;
  options.relative_floor = f.relative_floor;
  options.smoothing_schedule = f.schedule;
  options.seed_sigma = f.seed_sigma;
  return options;
}

absl::StatusOr<CostModel> ToCostModel(const CostFlags& f) {
  absl::StatusOr<CostFamily> family = ParseCostFamily(f.family);
  if (!family.ok()) return family.status();
  CostModel model = *family == CostFamily::kQuadratic
                        ? CostModel::Quadratic(f.budget, f.sensitivity)
                        : CostModel::Power(f.alpha, f.beta, f.budget,
                                           f.sensitivity);
  if (absl::Status s = ValidateCostModel(model); !s.ok()) return s;
  return model;
}

void AddShapeFlags(CLI::App* app, ShapeFlags& f) {
  app->add_option("--n", f.n, "grid cells per unit sensitivity")
      ->capture_default_str();
  app->add_option("--N", f.N, "number of explicit weights minus one")
      ->capture_default_str();
  app->add_option("--r", f.r, "geometric tail ratio")->capture_default_str();
}

void AddSolverFlags(CLI::App* app, SolverFlags& f) {
  app->add_option("--max-iterations", f.max_iterations)->capture_default_str();
  app->add_option("--tolerance", f.tolerance, "objective accuracy in nats")
      ->capture_default_str();
  app->add_option("--floor", f.floor, "absolute lower bound on each weight")
      ->capture_default_str();
  app->add_option("--relative-floor", f.relative_floor,
                  "lower bound on each weight relative to p_0")
      ->capture_default_str();
  app->add_option("--schedule", f.schedule,
                  "barrier parameters, strictly decreasing")
      ->delimiter(',');
  app->add_option("--seed-sigma", f.seed_sigma,
                  "Gaussian warm start scale (0 selects sqrt(C))")
      ->capture_default_str();
}

absl::Status WriteJson(const std::string& path, const Json& json) {
  return WriteTextFile(path, json.dump(2) + "\n");
}

int Fail(std::ostream& err, int code, const absl::Status& status) {
  err << "error: " << status.message() << "\n";
  return code;
}

// Writes `<output>.config.json`, the resolved parameters of this run.
absl::Status EchoConfig(const std::string& output, const std::string& command,
                        Json params) {
  Json config = Json::object();
  config["command"] = command;
  config["params"] = std::move(params);
  return WriteJson(output + ".config.json", config);
}

int RunSynth(SynthConfig config, std::ostream& out, std::ostream& err) {
  const std::string output = ResolveOutputPath(config.output);
  absl::StatusOr<CostModel> cost = ToCostModel(config.cost);
  if (!cost.ok()) return Fail(err, kExitUsage, cost.status());
  const SynthesisProblem problem{
      {config.shape.n, config.shape.N, config.shape.r}, *cost};
  const SolverOptions options = ToOptions(config.solver);
  if (absl::Status s = ValidateOptions(options); !s.ok()) {
    return Fail(err, kExitUsage, s);
  }
  if (absl::Status s = ValidateProblem(problem); !s.ok()) {
    return Fail(err,
                s.code() == absl::StatusCode::kFailedPrecondition
                    ? kExitInfeasible
                    : kExitUsage,
                s);
  }

  Json params = Json::object();
  params["shape"] = ShapeJson(config.shape);
  params["cost"] = {{"family", config.cost.family},
                    {"alpha", cost->alpha},
                    {"beta", cost->beta},
                    {"C", cost->budget},
                    {"s", cost->sensitivity}};
  params["solver"] = SolverJson(config.solver);
  params["output"] = output;
  if (absl::Status s = EchoConfig(output, "synth", params); !s.ok()) {
    return Fail(err, kExitNumericalFailure, s);
  }

  absl::StatusOr<SynthesisResult> result = Synthesize(problem, options);
  if (!result.ok()) {
    return Fail(err,
                result.status().code() == absl::StatusCode::kFailedPrecondition
                    ? kExitInfeasible
                    : kExitNumericalFailure,
                result.status());
  }
  Json provenance = Json::object();
  provenance["generator"] = "cactus synth";
  provenance["converged"] = result->converged;
  provenance["iterations"] = result->iterations;
  provenance["achieved_kl"] = result->achieved_kl;
  provenance["achieved_cost"] = result->achieved_cost;
  if (absl::Status s = WriteTextFile(
          output, SerializeMechanism(result->density, *cost, provenance));
      !s.ok()) {
    return Fail(err, kExitNumericalFailure, s);
  }
  if (absl::Status s =
          WriteJson(output + ".solve_report.json", SolveReportToJson(*result));
      !s.ok()) {
    return Fail(err, kExitNumericalFailure, s);
  }
  for (const std::string& warning : result->warnings) {
    err << "warning: " << warning << "\n";
  }
  out << "sup_kl " << FormatDouble(result->achieved_kl) << "\n"
      << "expected_cost " << FormatDouble(result->achieved_cost) << "\n"
      << "iterations " << result->iterations << "\n"
      << "converged " << (result->converged ? "true" : "false") << "\n";
  return result->converged ? kExitSuccess : kExitNumericalFailure;
}

int RunCompare(CompareConfig config, std::ostream& out, std::ostream& err) {
  const std::string output = ResolveOutputPath(config.output);
  const SolverOptions options = ToOptions(config.solver);
  if (absl::Status s = ValidateOptions(options); !s.ok()) {
    return Fail(err, kExitUsage, s);
  }
  const CactusShape shape{config.shape.n, config.shape.N, config.shape.r};
  if (absl::Status s = ValidateShape(shape); !s.ok()) {
    return Fail(err, kExitUsage, s);
  }
  for (double sigma : config.sigmas) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      return Fail(err, kExitUsage,
                  absl::InvalidArgumentError("sigmas must be positive"));
    }
  }
  Json params = Json::object();
  params["shape"] = ShapeJson(config.shape);
  params["solver"] = SolverJson(config.solver);
  params["sigmas"] = config.sigmas;
  params["output"] = output;
  if (absl::Status s = EchoConfig(output, "compare-gaussian", params);
      !s.ok()) {
    return Fail(err, kExitNumericalFailure, s);
  }

  std::string csv = "sigma,kl_cactus,kl_gaussian\n";
  bool all_ok = true;
  for (double sigma : config.sigmas) {
    const SynthesisProblem problem{shape, CostModel::Quadratic(sigma * sigma)};
    absl::StatusOr<SynthesisResult> result = Synthesize(problem, options);
    std::string cactus_cell;
    if (!result.ok()) {
      all_ok = false;
      err << "warning: sigma=" << FormatDouble(sigma)
          << " failed: " << result.status().message() << "\n";
    } else {
      if (!result->converged) {
        err << "warning: sigma=" << FormatDouble(sigma)
            << " did not converge; reporting the last iterate\n";
      }
      cactus_cell = FormatDouble(result->achieved_kl);
    }
    const double gaussian = *GaussianKl(1.0, sigma);
    absl::StrAppend(&csv, FormatDouble(sigma), ",", cactus_cell, ",",
                    FormatDouble(gaussian), "\n");
  }
  if (absl::Status s = WriteTextFile(output, csv); !s.ok()) {
    return Fail(err, kExitNumericalFailure, s);
  }
  out << csv;
  return all_ok ? kExitSuccess : kExitNumericalFailure;
}

// Standard deviation of the Gaussian that spends the same budget as `cost`
// at unit sensitivity: beta s^alpha E|Z|^alpha = C.
double MatchedGaussianSigma(const CostModel& cost) {
  const CostModel unit = NormalizeProblem(cost);
  const double moment = std::pow(2.0, unit.alpha / 2.0) *
                        std::tgamma((unit.alpha + 1.0) / 2.0) /
                        std::sqrt(M_PI);
  return std::pow(unit.budget / (unit.beta * moment), 1.0 / unit.alpha);
}

int RunAccount(AccountConfig config, std::ostream& out, std::ostream& err) {
  const std::string output = ResolveOutputPath(config.output);
  const std::string report_path = ResolveOutputPath(
      config.report.empty() ? config.output + ".report.json" : config.report);
  std::vector<int64_t> compositions = config.compositions;
  if (compositions.empty()) {
    for (int64_t t = 1; t <= config.max_compositions; ++t) {
      compositions.push_back(t);
    }
  }
  if (compositions.empty()) {
    return Fail(err, kExitUsage,
                absl::InvalidArgumentError("give --T or --T-max"));
  }
  CompositionQuery query{config.delta, compositions.front(), config.q,
                         config.lambda_max};
  for (int64_t t : compositions) {
    query.compositions = t;
    if (absl::Status s = ValidateQuery(query); !s.ok()) {
      return Fail(err, kExitUsage, s);
    }
  }
  if (config.gaussian_sigma < 0.0) {
    return Fail(err, kExitUsage,
                absl::InvalidArgumentError("--gaussian-sigma must be positive"));
  }

  absl::StatusOr<MechanismFile> mechanism =
      ReadMechanismFile(config.mechanism);
  if (!mechanism.ok()) return Fail(err, kExitUsage, mechanism.status());

  double sigma = config.gaussian_sigma;
  if (config.gaussian && sigma == 0.0) {
    sigma = MatchedGaussianSigma(mechanism->cost);
  }
  const bool with_gaussian = sigma > 0.0;

  Json params = Json::object();
  params["mechanism"] = config.mechanism;
  params["delta"] = config.delta;
  params["T"] = compositions;
  params["q"] = config.q;
  params["lambda_max"] = config.lambda_max;
  params["gaussian_sigma"] = sigma;
  params["output"] = output;
  params["report"] = report_path;
  params["curve"] = config.curve;
  if (absl::Status s = EchoConfig(output, "account", params); !s.ok()) {
    return Fail(err, kExitNumericalFailure, s);
  }

  absl::StatusOr<MomentsCurve> curve =
      config.q < 1.0
          ? SubsampledMoments(mechanism->density, config.q, config.lambda_max)
          : MechanismMoments(mechanism->density, config.lambda_max);
  if (!curve.ok()) return Fail(err, kExitNumericalFailure, curve.status());
  std::optional<MomentsCurve> baseline;
  if (with_gaussian) {
    absl::StatusOr<MomentsCurve> g =
        config.q < 1.0
            ? SubsampledGaussianMoments(sigma, config.q, config.lambda_max)
            : GaussianMoments(sigma, config.lambda_max);
    if (!g.ok()) return Fail(err, kExitNumericalFailure, g.status());
    baseline = *std::move(g);
  }

  std::string csv = with_gaussian ? "T,epsilon,epsilon_gaussian\n"
                                  : "T,epsilon\n";
  PrivacyReport last;
  for (int64_t t : compositions) {
    query.compositions = t;
    absl::StatusOr<PrivacyReport> report = ComposeEpsilon(*curve, query);
    if (!report.ok()) return Fail(err, kExitNumericalFailure, report.status());
    absl::StrAppend(&csv, t, ",", FormatDouble(report->epsilon));
    if (baseline.has_value()) {
      absl::StatusOr<PrivacyReport> g = ComposeEpsilon(*baseline, query);
      if (!g.ok()) return Fail(err, kExitNumericalFailure, g.status());
      absl::StrAppend(&csv, ",", FormatDouble(g->epsilon));
    }
    absl::StrAppend(&csv, "\n");
    last = *std::move(report);
  }
  if (absl::Status s = WriteTextFile(output, csv); !s.ok()) {
    return Fail(err, kExitNumericalFailure, s);
  }
  if (absl::Status s = WriteJson(report_path, PrivacyReportToJson(last));
      !s.ok()) {
    return Fail(err, kExitNumericalFailure, s);
  }
  if (!config.curve.empty()) {
    if (absl::Status s = WriteTextFile(ResolveOutputPath(config.curve),
                                       MomentsCurveCsv(*curve));
        !s.ok()) {
      return Fail(err, kExitNumericalFailure, s);
    }
  }
  out << csv;
  return kExitSuccess;
}

int RunSample(SampleConfig config, std::ostream& out, std::ostream& err) {
  if (config.count < 0) {
    return Fail(err, kExitUsage,
                absl::InvalidArgumentError("--count must be nonnegative"));
  }
  absl::StatusOr<MechanismFile> mechanism =
      ReadMechanismFile(config.mechanism);
  if (!mechanism.ok()) return Fail(err, kExitUsage, mechanism.status());
  // The stored density is for unit sensitivity; scale back to query units.
  const double scale = mechanism->cost.sensitivity;
  std::string text;
  for (double x : mechanism->density.Sample(config.seed, config.count)) {
    absl::StrAppend(&text, FormatDouble(scale * x), "\n");
  }
  if (config.output.empty()) {
    out << text;
    return kExitSuccess;
  }
  if (absl::Status s = WriteTextFile(ResolveOutputPath(config.output), text);
      !s.ok()) {
    return Fail(err, kExitNumericalFailure, s);
  }
  return kExitSuccess;
}

}  // namespace

std::string ResolveOutputPath(const std::string& path) {
  const char* dir = std::getenv(kOutputDirEnv);
  if (path.empty() || dir == nullptr || *dir == '\0') return path;
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(dir) / p).string();
}

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Synthesize and account cactus noise mechanisms", "cactus"};
  app.require_subcommand(1);

  SynthConfig synth;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "solve for a cactus density");
  AddShapeFlags(synth_cmd, synth.shape);
  synth_cmd->add_option("--cost", synth.cost.family, "quadratic or power")
      ->capture_default_str();
  synth_cmd->add_option("--alpha", synth.cost.alpha, "power-law exponent")
      ->capture_default_str();
  synth_cmd->add_option("--beta", synth.cost.beta, "power-law scale")
      ->capture_default_str();
  synth_cmd->add_option("--C", synth.cost.budget, "cost budget")
      ->capture_default_str();
  synth_cmd->add_option("--s", synth.cost.sensitivity, "query sensitivity")
      ->capture_default_str();
  AddSolverFlags(synth_cmd, synth.solver);
  synth_cmd->add_option("-o,--output", synth.output, "mechanism JSON path")
      ->required();

  CompareConfig compare;
  CLI::App* compare_cmd = app.add_subcommand(
      "compare-gaussian", "sup-KL of cactus vs Gaussian noise at C = sigma^2");
  AddShapeFlags(compare_cmd, compare.shape);
  AddSolverFlags(compare_cmd, compare.solver);
  compare_cmd->add_option("--sigmas", compare.sigmas, "comma-separated")
      ->delimiter(',')
      ->required();
  compare_cmd->add_option("-o,--output", compare.output, "CSV path")
      ->required();

  AccountConfig account;
  CLI::App* account_cmd = app.add_subcommand(
      "account", "privacy loss of T-fold composition");
  account_cmd->add_option("--mechanism", account.mechanism)->required();
  account_cmd->add_option("--delta", account.delta)->capture_default_str();
  auto* t_list = account_cmd->add_option("--T", account.compositions,
                                         "comma-separated composition counts")
                     ->delimiter(',');
  account_cmd
      ->add_option("--T-max", account.max_compositions, "rows for T = 1..T-max")
      ->excludes(t_list);
  account_cmd->add_option("--q", account.q, "subsampling rate")
      ->capture_default_str();
  account_cmd->add_option("--lambda-max", account.lambda_max)
      ->capture_default_str();
  account_cmd->add_flag("--gaussian", account.gaussian,
                        "add a Gaussian baseline with the same budget");
  account_cmd->add_option("--gaussian-sigma", account.gaussian_sigma,
                          "explicit Gaussian baseline scale");
  account_cmd->add_option("-o,--output", account.output, "CSV path")
      ->required();
  account_cmd->add_option("--report", account.report,
                          "PrivacyReport JSON path (default <output>.report.json)");
  account_cmd->add_option("--curve", account.curve, "moments CSV path");

  SampleConfig sample;
  CLI::App* sample_cmd = app.add_subcommand("sample", "draw noise samples");
  sample_cmd->add_option("--mechanism", sample.mechanism)->required();
  sample_cmd->add_option("--count", sample.count)->required();
  sample_cmd->add_option("--seed", sample.seed)->capture_default_str();
  sample_cmd->add_option("-o,--output", sample.output,
                         "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitSuccess : kExitUsage;
  }

  if (synth_cmd->parsed()) return RunSynth(synth, out, err);
  if (compare_cmd->parsed()) return RunCompare(compare, out, err);
  if (account_cmd->parsed()) return RunAccount(account, out, err);
  return RunSample(sample, out, err);
}

}  // namespace cactus::cli
