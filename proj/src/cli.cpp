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
#include "detbound/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "detbound/data.hpp"
#include "detbound/diagnose.hpp"
#include "detbound/error.hpp"
#include "detbound/eval.hpp"
#include "detbound/geom.hpp"
#include "detbound/image.hpp"
#include "detbound/probes.hpp"
#include "detbound/report.hpp"
#include "detbound/upperbound.hpp"

namespace detbound::cli {

namespace fs = std::filesystem;

namespace {

// Flags that feed EvalConfig, shared by eval, uap and diagnose.
struct EvalFlags {
  std::string interpolation = "coco_101pt";
  std::size_t max_dets = 100;
  std::vector<double> iou_thresholds;
  unsigned threads = 1;
  bool permissive = false;

  void add_to(CLI::App& app) {
    app.add_option("--interp", interpolation, "coco_101pt or voc_all_points")
        ->check(CLI::IsMember({"coco_101pt", "voc_all_points"}));
    app.add_option("--max-dets", max_dets,
                   "Detections kept per image and category (0 = unlimited)");
    app.add_option("--iou-thresholds", iou_thresholds,
                   "IOU grid (default 0.5:0.05:0.95)")
        ->delimiter(',');
    app.add_option("--threads", threads, "Worker threads (0 = all cores)");
    app.add_flag("--permissive", permissive, "Drop crowd/ignore annotations");
  }

  EvalConfig config() const {
    EvalConfig cfg;
    cfg.interpolation = parse_interpolation(interpolation);
    cfg.max_dets_per_image =
        max_dets == 0 ? std::nullopt : std::optional<std::size_t>(max_dets);
    if (!iou_thresholds.empty()) cfg.iou_thresholds = iou_thresholds;
    cfg.threads = threads;
    return cfg;
  }

  LoadOptions load_options() const {
    LoadOptions o;
    o.permissive = permissive;
    return o;
  }
};

// Thrown for flag values that parse but make no sense.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

BBox parse_box(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError(fmt::format("--target: '{}' is not a number", part));
    }
  }
  if (v.size() != 4) throw UsageError("--target expects x,y,w,h");
  BBox b{v[0], v[1], v[2], v[3]};
  if (!b.valid()) throw UsageError("--target must have positive width and height");
  return b;
}

void write_or_print(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

std::vector<AnnotationId> parse_id_list(const std::string& text) {
  std::vector<AnnotationId> ids;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      ids.push_back(std::stoll(part));
    } catch (const std::exception&) {
      throw UsageError(fmt::format("'{}' is not an annotation id", part));
    }
  }
  return ids;
}

ImageLoader directory_loader(const fs::path& dir) {
  return [dir](const ImageInfo& info) {
    if (info.file_name.empty()) {
      throw ValidationError(fmt::format("image {}: no file_name", info.id));
    }
    return read_image(dir / info.file_name);
  };
}

void write_probe_output(const ProbeOutput& probe, std::string_view variant,
                        const fs::path& out_dir) {
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < probe.images.size(); ++i) {
    write_image(probe.images[i], out_dir / probe.dataset.images[i].file_name);
  }
  save_dataset(probe.dataset, out_dir / "annotations.json");
  write_text_file(out_dir / "manifest.json",
                  manifest_to_json(variant, probe.manifest).dump(2) + "\n");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Detection evaluation, upper-bound AP, error diagnosis and probe generation"};
  app.name("detbound");
  app.require_subcommand(1, 1);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score detections against annotations");
  std::string ann, det, out_path, csv_path, curves_path;
  bool canonical = false;
  EvalFlags eval_flags;
  eval_cmd->add_option("--ann", ann, "COCO annotation file")->required();
  eval_cmd->add_option("--det", det, "COCO detection results")->required();
  eval_cmd->add_option("--out", out_path, "Report path (.json or .csv; default stdout)");
  eval_cmd->add_option("--csv", csv_path, "Additional CSV report");
  eval_cmd->add_option("--pr-curves", curves_path, "Export PR curve points (CSV)");
  eval_cmd->add_flag("--canonical-order", canonical,
                     "Re-sort detections by (score, image, category, box) first");
  eval_flags.add_to(*eval_cmd);

  // uap
  auto* uap_cmd = app.add_subcommand("uap", "Upper-bound AP from classifier-labeled targets");
  std::string cls_path, mode = "most_confident_box";
  int strategy = 1;
  bool neighbors_only = false, constant_conf = false, compare_constant = false;
  EvalFlags uap_flags;
  uap_cmd->add_option("--ann", ann, "COCO annotation file")->required();
  uap_cmd->add_option("--cls", cls_path, "Classifier output file")->required();
  uap_cmd->add_option("--strategy", strategy, "1 (target box) or 2 (neighborhood)")
      ->check(CLI::IsMember({1, 2}));
  uap_cmd->add_option("--mode", mode, "most_confident_box or most_frequent_label")
      ->check(CLI::IsMember({"most_confident_box", "most_frequent_label"}));
  uap_cmd->add_flag("--neighbors-only", neighbors_only,
                    "Strategy 2: leave the target's own prediction out");
  uap_cmd->add_flag("--constant-confidence", constant_conf, "Score every box 1");
  uap_cmd->add_flag("--compare-constant", compare_constant,
                    "Also print mAP with all confidences set to 1");
  uap_cmd->add_option("--out", out_path, "Report path (.json or .csv; default stdout)");
  uap_cmd->add_option("--csv", csv_path, "Additional CSV report");
  uap_flags.add_to(*uap_cmd);

  // diagnose
  auto* diag_cmd = app.add_subcommand("diagnose", "Sequential error attribution");
  std::string counts_path;
  DiagnoseConfig diag_cfg;
  EvalFlags diag_flags;
  diag_cmd->add_option("--ann", ann, "COCO annotation file")->required();
  diag_cmd->add_option("--det", det, "COCO detection results")->required();
  diag_cmd->add_option("--out", out_path, "Report path (.json or .csv)");
  diag_cmd->add_option("--csv", csv_path, "CSV report path (default stdout)");
  diag_cmd->add_option("--counts", counts_path, "Per-category label counts (CSV)");
  diag_cmd->add_option("--t-bg", diag_cfg.t_bg, "Background IOU bound");
  diag_cmd->add_option("--t-loc", diag_cfg.t_loc, "Labeling IOU threshold");
  diag_flags.add_to(*diag_cmd);

  // sample-boxes
  auto* sample_cmd = app.add_subcommand("sample-boxes", "Boxes with IOU >= gamma to a target");
  double gamma = 0.5;
  std::size_t n = 4;
  std::string target;
  std::uint64_t seed = 0;
  sample_cmd->add_option("--gamma", gamma, "Minimum IOU")->required();
  sample_cmd->add_option("--n", n, "Number of boxes");
  sample_cmd->add_option("--target", target, "x,y,w,h")->required();
  sample_cmd->add_option("--seed", seed, "Random seed");

  // probes
  auto* probe_cmd = app.add_subcommand("probes", "Generate an invariance-probe dataset");
  std::string images_dir, variant, backgrounds_dir, objects, placement = "random";
  int min_dim = 300, ksize = 11;
  double sigma = 2.0;
  unsigned probe_threads = 1;
  bool probe_permissive = false;
  probe_cmd->add_option("--ann", ann, "COCO annotation file")->required();
  probe_cmd->add_option("--images", images_dir, "Directory holding the images")->required();
  probe_cmd->add_option("--variant", variant, "Probe kind")
      ->required()
      ->check(CLI::IsMember({"white_bg", "noise_bg", "objects_only", "crop", "crop_resize",
                             "gaussian_blur", "vertical_flip", "incongruent"}));
  probe_cmd->add_option("--out", out_path, "Output directory")->required();
  probe_cmd->add_option("--seed", seed, "Random seed");
  probe_cmd->add_option("--min-dim", min_dim, "crop_resize: smallest output side");
  probe_cmd->add_option("--ksize", ksize, "gaussian_blur: kernel size (odd)");
  probe_cmd->add_option("--sigma", sigma, "gaussian_blur: standard deviation");
  probe_cmd->add_option("--backgrounds", backgrounds_dir, "incongruent: background images");
  probe_cmd->add_option("--objects", objects, "incongruent: annotation ids to paste");
  probe_cmd->add_option("--placement", placement, "incongruent: random or same_center")
      ->check(CLI::IsMember({"random", "same_center"}));
  probe_cmd->add_option("--threads", probe_threads, "Worker threads (0 = all cores)");
  probe_cmd->add_flag("--permissive", probe_permissive, "Drop crowd/ignore annotations");

  // export-crops
  auto* crops_cmd = app.add_subcommand("export-crops", "Context-scaled classification crops");
  double scale = 1.0;
  std::string ctx_mode = "object_only", fill = "mean";
  crops_cmd->add_option("--ann", ann, "COCO annotation file")->required();
  crops_cmd->add_option("--images", images_dir, "Directory holding the images")->required();
  crops_cmd->add_option("--scale", scale, "Box scale factor (0.2 to 2)");
  crops_cmd->add_option("--mode", ctx_mode, "Crop mode")
      ->check(CLI::IsMember({"object_only", "object_plus_context", "context_only",
                             "whole_image"}));
  crops_cmd->add_option("--fill", fill, "context_only fill: mean, gray or white")
      ->check(CLI::IsMember({"mean", "gray", "white"}));
  crops_cmd->add_option("--out", out_path, "Output directory")->required();

  // correlate
  auto* corr_cmd = app.add_subcommand("correlate", "Fit UAP against classifier accuracy");
  std::vector<std::string> points;
  std::string points_file;
  corr_cmd->add_option("--point", points, "accuracy,uap (repeatable)");
  corr_cmd->add_option("--input", points_file, "CSV file with accuracy,uap rows");

  std::vector<std::string> argv_store = args;
  argv_store.insert(argv_store.begin(), "detbound");
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (eval_cmd->parsed()) {
      const auto ds = load_dataset(ann, eval_flags.load_options());
      auto dets = load_detections(det, ds);
      if (canonical) sort_canonical(dets);
      auto cfg = eval_flags.config();
      cfg.keep_curves = !curves_path.empty();
      const auto report = evaluate(ds, dets, cfg);
      if (out_path.empty()) {
        out << render(report, ReportFormat::Json);
      } else {
        emit_report(report, out_path);
      }
      if (!csv_path.empty()) emit_report(report, csv_path, ReportFormat::Csv);
      if (!curves_path.empty()) write_text_file(curves_path, curves_to_csv(report));
    } else if (uap_cmd->parsed()) {
      const auto ds = load_dataset(ann, uap_flags.load_options());
      const auto outputs = load_classifier_outputs(cls_path, ds);
      const auto cfg = uap_flags.config();
      UapOptions opts;
      opts.constant_confidence = constant_conf;
      opts.neighbors_only = neighbors_only;
      auto compute = [&](const UapOptions& o) {
        return strategy == 1
                   ? uap_strategy1(ds, outputs, cfg, o)
                   : uap_strategy2(ds, outputs, parse_aggregation_mode(mode), cfg, o);
      };
      const auto report = compute(opts);
      if (out_path.empty()) {
        out << render(report, ReportFormat::Json);
      } else {
        emit_report(report, out_path);
      }
      if (!csv_path.empty()) emit_report(report, csv_path, ReportFormat::Csv);
      if (compare_constant) {
        UapOptions c = opts;
        c.constant_confidence = true;
        const auto constant = compute(c);
        auto show = [](const std::optional<double>& v) {
          return v ? format_number(*v) : std::string("undefined");
        };
        err << fmt::format("mAP with classifier confidence: {}; with confidence 1: {}\n",
                           show(report.map), show(constant.map));
      }
    } else if (diag_cmd->parsed()) {
      const auto ds = load_dataset(ann, diag_flags.load_options());
      const auto dets = load_detections(det, ds);
      const auto report = diagnose(ds, dets, diag_flags.config(), diag_cfg);
      if (!out_path.empty()) emit_report(report, out_path);
      if (!csv_path.empty() || out_path.empty()) {
        write_or_print(to_csv(report), csv_path, out);
      }
      if (!counts_path.empty()) write_text_file(counts_path, counts_to_csv(report));
    } else if (sample_cmd->parsed()) {
      const BBox t = parse_box(target);
      out << "x,y,w,h,iou\n";
      for (const auto& b : sample_boxes_min_iou(t, gamma, n, seed)) {
        out << fmt::format("{},{},{},{},{}\n", format_number(b.x), format_number(b.y),
                           format_number(b.w), format_number(b.h),
                           format_number(iou(b, t)));
      }
    } else if (probe_cmd->parsed()) {
      LoadOptions lo;
      lo.permissive = probe_permissive;
      const auto ds = load_dataset(ann, lo);
      const auto load = directory_loader(images_dir);
      if (variant == "incongruent") {
        if (backgrounds_dir.empty() || objects.empty()) {
          throw UsageError("incongruent probes need --backgrounds and --objects");
        }
        std::vector<PasteObject> pasted;
        for (auto id : parse_id_list(objects)) {
          const auto* a = ds.find_annotation(id);
          if (a == nullptr) throw ValidationError(fmt::format("unknown annotation {}", id));
          pasted.push_back(cut_object(load(*ds.find_image(a->image_id)), *a));
        }
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(backgrounds_dir)) {
          if (entry.is_regular_file()) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        std::vector<Image> backgrounds;
        for (const auto& f : files) backgrounds.push_back(read_image(f));
        const auto rule = placement == "random" ? PlacementRule::Random
                                                : PlacementRule::SameRelativeCenter;
        write_probe_output(
            generate_incongruent_set(pasted, backgrounds, ds.categories, rule, seed),
            "incongruent", out_path);
      } else {
        ProbeSpec spec = WhiteBackground{};
        if (variant == "noise_bg") spec = NoiseBackground{};
        if (variant == "objects_only") spec = ObjectsOnly{};
        if (variant == "crop") spec = CropObject{};
        if (variant == "crop_resize") spec = CropResize{min_dim};
        if (variant == "gaussian_blur") spec = GaussianBlur{ksize, sigma};
        if (variant == "vertical_flip") spec = VerticalFlip{};
        write_probe_output(generate_probe_dataset(ds, load, spec, seed, probe_threads),
                           probe_name(spec), out_path);
      }
    } else if (crops_cmd->parsed()) {
      const auto ds = load_dataset(ann);
      ContextScale ctx{scale, parse_context_mode(ctx_mode), parse_fill_mode(fill)};
      const auto crops = export_context_crops(ds, directory_loader(images_dir), ctx);
      fs::create_directories(out_path);
      std::size_t k = 0;
      for (const auto& e : crops.manifest) {
        if (e.skipped) {
          err << fmt::format("warning: annotation {} skipped: {}\n", e.annotation_id,
                             e.warning);
          continue;
        }
        write_image(crops.crops[k++], fs::path(out_path) / e.file_name);
      }
      write_text_file(fs::path(out_path) / "manifest.json",
                      crop_manifest_to_json(ctx, crops.manifest).dump(2) + "\n");
    } else if (corr_cmd->parsed()) {
      std::vector<std::string> rows = points;
      if (!points_file.empty()) {
        std::ifstream in(points_file);
        if (!in) throw ParseError(fmt::format("cannot open {}", points_file));
        std::string line;
        while (std::getline(in, line)) {
          if (line.empty() || line.rfind("accuracy", 0) == 0) continue;
          rows.push_back(line);
        }
      }
      std::vector<AccuracyUapPoint> pts;
      for (const auto& r : rows) {
        const auto comma = r.find(',');
        try {
          if (comma == std::string::npos) throw std::invalid_argument(r);
          pts.push_back({std::stod(r.substr(0, comma)), std::stod(r.substr(comma + 1))});
        } catch (const std::exception&) {
          throw ParseError(fmt::format("point '{}' is not accuracy,uap", r));
        }
      }
      out << to_json(correlate_accuracy_uap(pts)).dump() << "\n";
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace detbound::cli
