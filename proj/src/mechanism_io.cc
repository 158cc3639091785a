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

#include "cactus/mechanism_io.h"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/string_view.h"
#include "cactus/cost.h"
#include "cactus/density.h"

namespace cactus {
namespace {

absl::Status FieldError(absl::string_view field, absl::string_view problem) {
  return absl::InvalidArgumentError(
      absl::StrCat("mechanism file: field '", field, "' ", problem));
}

absl::StatusOr<double> NumberField(const Json& object, absl::string_view parent,
                                   const char* key) {
  const std::string name =
      parent.empty() ? std::string(key) : absl::StrCat(parent, ".", key);
  auto it = object.find(key);
  if (it == object.end()) return FieldError(name, "is missing");
  if (!it->is_number()) return FieldError(name, "must be a number");
  return it->get<double>();
}

absl::StatusOr<int> IntegerField(const Json& object, const char* key) {
  auto it = object.find(key);
  if (it == object.end()) return FieldError(key, "is missing");
  if (!it->is_number_integer()) return FieldError(key, "must be an integer");
  return it->get<int>();
}

}  // namespace

Json MechanismToJson(const CactusDensity& density, const CostModel& cost,
                     const Json& provenance) {
  Json out = Json::object();
  out["format_version"] = kMechanismFormatVersion;
  out["n"] = density.shape().n;
  out["N"] = density.shape().N;
  out["r"] = density.shape().r;
  Json weights = Json::array();
  for (double w : density.weights()) weights.push_back(w);
  out["p"] = std::move(weights);
  Json cost_json = Json::object();
  cost_json["family"] = std::string(CostFamilyName(cost.family));
  cost_json["alpha"] = cost.alpha;
  cost_json["beta"] = cost.beta;
  cost_json["C"] = cost.budget;
  cost_json["s"] = cost.sensitivity;
  out["cost"] = std::move(cost_json);
  out["provenance"] = provenance.is_object() ? provenance : Json::object();
  return out;
}

std::string SerializeMechanism(const CactusDensity& density,
                               const CostModel& cost, const Json& provenance) {
  return MechanismToJson(density, cost, provenance).dump(2) + "\n";
}

absl::StatusOr<MechanismFile> ParseMechanism(std::string_view text) {
  Json root = Json::parse(text.begin(), text.end(), nullptr,
                          /*allow_exceptions=*/false);
  if (root.is_discarded()) {
    return absl::InvalidArgumentError("mechanism file is not valid JSON");
  }
  if (!root.is_object()) {
    return absl::InvalidArgumentError(
        "mechanism file must contain a JSON object");
  }
  absl::StatusOr<int> version = IntegerField(root, "format_version");
  if (!version.ok()) return version.status();
  if (*version != kMechanismFormatVersion) {
    return FieldError("format_version",
                      absl::StrCat("must be ", kMechanismFormatVersion,
                                   ", got ", *version));
  }
  absl::StatusOr<int> n = IntegerField(root, "n");
  if (!n.ok()) return n.status();
  absl::StatusOr<int> big_n = IntegerField(root, "N");
  if (!big_n.ok()) return big_n.status();
  absl::StatusOr<double> r = NumberField(root, "", "r");
  if (!r.ok()) return r.status();
  const CactusShape shape{*n, *big_n, *r};
  if (absl::Status s = ValidateShape(shape); !s.ok()) {
    return FieldError("n/N/r", s.message());
  }

  auto p_it = root.find("p");
  if (p_it == root.end()) return FieldError("p", "is missing");
  if (!p_it->is_array()) return FieldError("p", "must be an array");
  if (p_it->size() != static_cast<size_t>(shape.N) + 1) {
    return FieldError("p", absl::StrCat("must have N+1=", shape.N + 1,
                                        " entries, got ", p_it->size()));
  }
  std::vector<double> weights;
  weights.reserve(p_it->size());
  for (size_t i = 0; i < p_it->size(); ++i) {
    const Json& entry = (*p_it)[i];
    if (!entry.is_number()) {
      return FieldError(absl::StrCat("p[", i, "]"), "must be a number");
    }
    weights.push_back(entry.get<double>());
  }

  auto cost_it = root.find("cost");
  if (cost_it == root.end()) return FieldError("cost", "is missing");
  if (!cost_it->is_object()) return FieldError("cost", "must be an object");
  auto family_it = cost_it->find("family");
  if (family_it == cost_it->end() || !family_it->is_string()) {
    return FieldError("cost.family", "must be a string");
  }
  absl::StatusOr<CostFamily> family =
      ParseCostFamily(family_it->get<std::string>());
  if (!family.ok()) return FieldError("cost.family", family.status().message());
  CostModel cost;
  cost.family = *family;
  for (auto [key, target] :
       {std::pair{"alpha", &cost.alpha}, std::pair{"beta", &cost.beta},
        std::pair{"C", &cost.budget}, std::pair{"s", &cost.sensitivity}}) {
    absl::StatusOr<double> value = NumberField(*cost_it, "cost", key);
    if (!value.ok()) return value.status();
    *target = *value;
  }
  if (absl::Status s = ValidateCostModel(cost); !s.ok()) {
    return FieldError("cost", s.message());
  }

  Json provenance = Json::object();
  if (auto it = root.find("provenance"); it != root.end()) {
    if (!it->is_object()) return FieldError("provenance", "must be an object");
    provenance = *it;
  }

  absl::StatusOr<CactusDensity> density =
      CactusDensity::Create(shape, std::move(weights));
  if (!density.ok()) return FieldError("p", density.status().message());
  return MechanismFile{*std::move(density), cost, std::move(provenance)};
}

Json SolveReportToJson(const SynthesisResult& result) {
  Json report = Json::object();
  report["converged"] = result.converged;
  report["iterations"] = result.iterations;
  report["final_objective"] = result.achieved_kl;
  report["achieved_cost"] = result.achieved_cost;
  report["cost_slack"] = result.cost_slack;
  report["normalization_residual"] = result.normalization_residual;
  report["floor_active"] = result.floor_active;
  Json certificate = Json::array();
  for (double v : result.certificate) certificate.push_back(v);
  report["certificate"] = std::move(certificate);
  Json stages = Json::array();
  for (double v : result.stage_objectives) stages.push_back(v);
  report["stage_objectives"] = std::move(stages);
  Json warnings = Json::array();
  for (const std::string& w : result.warnings) warnings.push_back(w);
  report["warnings"] = std::move(warnings);
  return report;
}

Json PrivacyReportToJson(const PrivacyReport& report) {
  Json out = Json::object();
  out["delta"] = report.query.delta;
  out["T"] = report.query.compositions;
  out["q"] = report.query.q;
  out["lambda_max"] = report.query.lambda_max;
  out["epsilon"] = report.epsilon;
  out["argmin_lambda"] = report.argmin_lambda;
  return out;
}

std::string FormatDouble(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::string MomentsCurveCsv(const MomentsCurve& curve) {
  std::string out = "lambda,alpha\n";
  for (size_t j = 0; j < curve.lambdas.size(); ++j) {
    absl::StrAppend(&out, curve.lambdas[j], ",", FormatDouble(curve.alphas[j]),
                    "\n");
  }
  return out;
}

std::vector<std::vector<std::string>> ParseCsv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    std::vector<std::string> fields;
    size_t field_start = 0;
    while (true) {
      const size_t comma = line.find(',', field_start);
      if (comma == std::string_view::npos) {
        fields.emplace_back(line.substr(field_start));
        break;
      }
      fields.emplace_back(line.substr(field_start, comma - field_start));
      field_start = comma + 1;
    }
    rows.push_back(std::move(fields));
    start = end + 1;
  }
  return rows;
}

absl::StatusOr<std::string> ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) return absl::DataLossError(absl::StrCat("error reading ", path));
  return buffer.str();
}

absl::Status WriteTextFile(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot open ", path, " for writing"));
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) return absl::DataLossError(absl::StrCat("error writing ", path));
  return absl::OkStatus();
}

absl::StatusOr<MechanismFile> ReadMechanismFile(const std::string& path) {
  absl::StatusOr<std::string> text = ReadTextFile(path);
  if (!text.ok()) return text.status();
  absl::StatusOr<MechanismFile> parsed = ParseMechanism(*text);
  if (!parsed.ok()) {
    return absl::Status(parsed.status().code(),
                        absl::StrCat(path, ": ", parsed.status().message()));
  }
  return parsed;
}

}  // namespace cactus
