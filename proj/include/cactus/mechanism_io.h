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

#ifndef CACTUS_MECHANISM_IO_H_
#define CACTUS_MECHANISM_IO_H_

#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "cactus/accountant.h"
#include "cactus/cost.h"
#include "cactus/density.h"
#include "cactus/solver.h"
#include "json.hpp"

// On-disk formats.
//
// Mechanism file (JSON, keys in this order):
//   {"format_version": 1, "n": int, "N": int, "r": float, "p": [N+1 floats],
//    "cost": {"family": "quadratic"|"power", "alpha", "beta", "C", "s"},
//    "provenance": {...}}
//
// Privacy report (JSON):
//   {"delta", "T", "q", "lambda_max", "epsilon", "argmin_lambda"}
//
// CSV files use ',' separators, '.' decimals, LF line endings, and print
// floats with 17 significant digits.

namespace cactus {

inline constexpr int kMechanismFormatVersion = 1;

using Json = nlohmann::ordered_json;

struct MechanismFile {
  CactusDensity density;
  CostModel cost;
  Json provenance = Json::object();
};

Json MechanismToJson(const CactusDensity& density, const CostModel& cost,
                     const Json& provenance);
std::string SerializeMechanism(const CactusDensity& density,
                               const CostModel& cost, const Json& provenance);

// Validates the schema; errors name the offending field.
absl::StatusOr<MechanismFile> ParseMechanism(std::string_view text);

Json SolveReportToJson(const SynthesisResult& result);
Json PrivacyReportToJson(const PrivacyReport& report);

// "%.17g"; parses back to the identical double.
std::string FormatDouble(double value);

// One row per order, header "lambda,alpha".
std::string MomentsCurveCsv(const MomentsCurve& curve);

// Splits LF-terminated CSV text into rows of fields.
std::vector<std::vector<std::string>> ParseCsv(std::string_view text);

absl::StatusOr<std::string> ReadTextFile(const std::string& path);
absl::Status WriteTextFile(const std::string& path, std::string_view content);

absl::StatusOr<MechanismFile> ReadMechanismFile(const std::string& path);

}  // namespace cactus

#endif  // CACTUS_MECHANISM_IO_H_
