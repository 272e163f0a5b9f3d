// Copyright 2026 The detbound Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

// JSON and CSV rendering of evaluation and diagnosis reports. Numbers carry
// six significant digits; the same report always renders to the same bytes.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "detbound/diagnose.hpp"
#include "detbound/eval.hpp"
#include "detbound/upperbound.hpp"

namespace detbound {

enum class ReportFormat { Json, Csv };

ReportFormat parse_report_format(std::string_view text);
// From a path's extension: ".csv" is CSV, anything else JSON.
ReportFormat report_format_for(const std::filesystem::path& path);

// "%#.6g": six significant digits, trailing zeros kept (50.4950, 100.000).
std::string format_number(double v);
// Value rounded to six significant digits, for JSON output.
double round_significant(double v);

nlohmann::json to_json(const EvalReport& report);
std::string to_csv(const EvalReport& report);
// One row per (category, IOU, rank) of the kept curves.
std::string curves_to_csv(const EvalReport& report);

nlohmann::json to_json(const DiagnosisReport& report);
std::string to_csv(const DiagnosisReport& report);
std::string counts_to_csv(const DiagnosisReport& report);

nlohmann::json to_json(const LinearFit& fit);

std::string render(const EvalReport& report, ReportFormat format);
std::string render(const DiagnosisReport& report, ReportFormat format);

// Writes the rendered report; IoError when the path is not writable.
void emit_report(const EvalReport& report, const std::filesystem::path& path,
                 std::optional<ReportFormat> format = std::nullopt);
void emit_report(const DiagnosisReport& report, const std::filesystem::path& path,
                 std::optional<ReportFormat> format = std::nullopt);

}  // namespace detbound
