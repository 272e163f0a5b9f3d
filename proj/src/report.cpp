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
#include "detbound/report.hpp"

#include <cmath>
#include <cstdlib>

#include <fmt/format.h>

#include "detbound/data.hpp"
#include "detbound/error.hpp"

namespace detbound {

using nlohmann::json;

namespace {

json number_or_null(const std::optional<double>& v) {
  return v ? json(round_significant(*v)) : json(nullptr);
}

json number_list(const std::vector<std::optional<double>>& v) {
  json out = json::array();
  for (const auto& x : v) out.push_back(number_or_null(x));
  return out;
}

std::string cell(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

constexpr std::string_view kEvalCsvHeader =
    "category_id,name,n_gt,AP,AP50,AP75,AP_small,AP_medium,AP_large\n";

}  // namespace

ReportFormat parse_report_format(std::string_view text) {
  if (text == "json") return ReportFormat::Json;
  if (text == "csv") return ReportFormat::Csv;
  throw PreconditionError(fmt::format("unknown report format '{}'", text));
}

ReportFormat report_format_for(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? ReportFormat::Csv : ReportFormat::Json;
}

std::string format_number(double v) {
  if (v == 0.0) v = 0.0;  // no "-0.00000"
  return fmt::format("{:#.6g}", v);
}

double round_significant(double v) {
  if (!std::isfinite(v)) return v;
  return std::strtod(fmt::format("{:.6g}", v).c_str(), nullptr);
}

json to_json(const EvalReport& report) {
  json categories = json::array();
  for (const auto& c : report.categories) {
    categories.push_back({{"category_id", c.category_id},
                          {"name", c.name},
                          {"n_gt", c.n_gt},
                          {"AP", number_or_null(c.ap)},
                          {"AP50", number_or_null(c.ap50)},
                          {"AP75", number_or_null(c.ap75)},
                          {"AP_small", number_or_null(c.ap_small)},
                          {"AP_medium", number_or_null(c.ap_medium)},
                          {"AP_large", number_or_null(c.ap_large)},
                          {"AP_per_iou", number_list(c.ap_per_iou)},
                          {"recall_per_iou", number_list(c.recall_per_iou)}});
  }
  json thresholds = json::array();
  for (double t : report.iou_thresholds) thresholds.push_back(round_significant(t));
  return {{"interpolation", to_string(report.interpolation)},
          {"iou_thresholds", std::move(thresholds)},
          {"mAP", number_or_null(report.map)},
          {"AP50", number_or_null(report.ap50)},
          {"AP75", number_or_null(report.ap75)},
          {"AP_small", number_or_null(report.ap_small)},
          {"AP_medium", number_or_null(report.ap_medium)},
          {"AP_large", number_or_null(report.ap_large)},
          {"AP_per_iou", number_list(report.ap_per_iou)},
          {"recall_per_iou", number_list(report.recall_per_iou)},
          {"categories", std::move(categories)}};
}

std::string to_csv(const EvalReport& report) {
  std::string out(kEvalCsvHeader);
  if (report.categories.empty()) return out;
  std::size_t n_gt = 0;
  for (const auto& c : report.categories) n_gt += c.n_gt;
  out += fmt::format("all,all,{},{},{},{},{},{},{}\n", n_gt, cell(report.map),
                     cell(report.ap50), cell(report.ap75), cell(report.ap_small),
                     cell(report.ap_medium), cell(report.ap_large));
  for (const auto& c : report.categories) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", c.category_id,
                       csv_escape(c.name), c.n_gt, cell(c.ap), cell(c.ap50),
                       cell(c.ap75), cell(c.ap_small), cell(c.ap_medium),
                       cell(c.ap_large));
  }
  return out;
}

std::string curves_to_csv(const EvalReport& report) {
  std::string out = "category_id,iou_threshold,rank,score,is_tp,recall,precision\n";
  for (const auto& rec : report.curves) {
    const auto recall = rec.curve.recall();
    const auto precision = rec.curve.precision();
    for (std::size_t i = 0; i < recall.size(); ++i) {
      out += fmt::format("{},{},{},{},{},{},{}\n", rec.category_id,
                         format_number(rec.iou_threshold), i + 1,
                         format_number(rec.curve.scores[i]),
                         rec.curve.is_tp[i] ? 1 : 0, format_number(recall[i]),
                         format_number(precision[i]));
    }
  }
  return out;
}

json to_json(const DiagnosisReport& report) {
  json columns = json::array();
  for (auto c : kDiagnosisColumns) columns.push_back(c);
  json values = json::array();
  for (const auto& v : report.sequence()) values.push_back(number_or_null(v));
  json counts = json::array();
  for (const auto& c : report.counts) {
    counts.push_back({{"category_id", c.category_id},
                      {"stage", to_string(c.stage)},
                      {"true_positive", c.counts.true_positive},
                      {"background", c.counts.background},
                      {"mislocalized", c.counts.mislocalized},
                      {"duplicate", c.counts.duplicate},
                      {"missed", c.counts.missed}});
  }
  return {{"columns", std::move(columns)},
          {"mAP", std::move(values)},
          {"counts", std::move(counts)}};
}

std::string to_csv(const DiagnosisReport& report) {
  std::string out;
  for (std::size_t i = 0; i < kDiagnosisColumns.size(); ++i) {
    out += (i ? "," : "") + csv_escape(kDiagnosisColumns[i]);
  }
  out += "\n";
  const auto seq = report.sequence();
  for (std::size_t i = 0; i < seq.size(); ++i) {
    out += (i ? "," : "") + cell(seq[i]);
  }
  out += "\n";
  return out;
}

std::string counts_to_csv(const DiagnosisReport& report) {
  std::string out =
      "category_id,stage,true_positive,background,mislocalized,duplicate,missed\n";
  for (const auto& c : report.counts) {
    out += fmt::format("{},{},{},{},{},{},{}\n", c.category_id, to_string(c.stage),
                       c.counts.true_positive, c.counts.background,
                       c.counts.mislocalized, c.counts.duplicate, c.counts.missed);
  }
  return out;
}

json to_json(const LinearFit& fit) {
  return {{"slope", round_significant(fit.slope)},
          {"intercept", round_significant(fit.intercept)},
          {"r_squared", round_significant(fit.r_squared)}};
}

std::string render(const EvalReport& report, ReportFormat format) {
  return format == ReportFormat::Csv ? to_csv(report) : to_json(report).dump(2) + "\n";
}

std::string render(const DiagnosisReport& report, ReportFormat format) {
  return format == ReportFormat::Csv ? to_csv(report) : to_json(report).dump(2) + "\n";
}

void emit_report(const EvalReport& report, const std::filesystem::path& path,
                 std::optional<ReportFormat> format) {
  write_text_file(path, render(report, format.value_or(report_format_for(path))));
}

void emit_report(const DiagnosisReport& report, const std::filesystem::path& path,
                 std::optional<ReportFormat> format) {
  write_text_file(path, render(report, format.value_or(report_format_for(path))));
}

}  // namespace detbound
