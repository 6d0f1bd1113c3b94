#pragma once

#include <CLI11.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "facefeat/corpus.hpp"
#include "facefeat/errors.hpp"
#include "facefeat/eval.hpp"
#include "facefeat/face_model.hpp"
#include "facefeat/feature_template.hpp"
#include "facefeat/matcher.hpp"
#include "facefeat/parallel.hpp"
#include "facefeat/pnm.hpp"

// Command-line surface. Exit codes are a stable contract:
//   0 success, 1 detection failure(s), 2 usage or format error.

namespace facefeat {
namespace cli {

namespace detail_cli {

inline std::vector<std::string> read_path_list(const std::filesystem::path& list_path) {
  std::ifstream in(list_path);
  if (!in) throw IoError("cannot open " + list_path.string());
  std::vector<std::string> paths;
  std::string line;
  const std::filesystem::path dir = list_path.parent_path();
  while (std::getline(in, line)) {
    std::string::size_type hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    std::string token;
    if (!(row >> token)) continue;
    std::filesystem::path p(token);
    if (p.is_relative() && !dir.empty()) p = dir / p;
    paths.push_back(p.string());
  }
  return paths;
}

inline TemplateLibrary load_template_library(const std::vector<std::string>& paths) {
  TemplateLibrary lib;
  for (const std::string& p : paths) lib.add(load_template(p));
  return lib;
}

inline std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

struct SweepFlags {
  std::string annotations;
  std::vector<std::string> template_paths;
  std::vector<std::string> methods{"grayscale", "haar"};
  std::vector<std::string> shapes{"rectangular", "square"};
  double tolerance = 0.10;
  double eye_margin = 0.10;
  double mouth_width = 0.60;
  bool hierarchical = false;
  int refine_radius = 2;
  int min_dim = 20;
  int workers = 0;
  std::string out_path;
};

inline void add_sweep_flags(CLI::App* cmd, SweepFlags& f, bool single_step,
                            std::string* shape, int* step) {
  cmd->add_option("--annotations", f.annotations, "Annotation file")->required();
  cmd->add_option("--template", f.template_paths,
                  "Template file; repeat for every (method, feature) needed")
      ->required();
  cmd->add_option("--methods", f.methods, "Methods to evaluate")->delimiter(',');
  if (single_step) {
    cmd->add_option("--shape", *shape, "Patch shape (rectangular|square)");
    cmd->add_option("--step", *step, "Reduction step to evaluate");
  } else {
    cmd->add_option("--shapes", f.shapes, "Patch shapes to sweep")->delimiter(',');
  }
  cmd->add_option("--tolerance", f.tolerance, "Judging tolerance fraction (default 0.10)");
  cmd->add_option("--eye-margin", f.eye_margin, "Eye region margin fraction (default 0.10)");
  cmd->add_option("--mouth-width", f.mouth_width, "Mouth region width fraction (default 0.60)");
  cmd->add_flag("--hierarchical", f.hierarchical, "Coarse-to-fine pyramid scanning");
  cmd->add_option("--refine-radius", f.refine_radius, "Refinement radius per level (default 2)");
  cmd->add_option("--min-dim", f.min_dim, "Pyramid minimum dimension (default 20)");
  cmd->add_option("--workers", f.workers, "Worker threads (default: all cores)");
  cmd->add_option("--out", f.out_path, "Report file (default: stdout)");
}

inline int run_sweep_command(const SweepFlags& f, const std::optional<std::string>& shape,
                             const std::optional<int>& step, std::ostream& out) {
  std::vector<Method> methods;
  for (const std::string& m : f.methods) methods.push_back(parse_method(m));
  std::vector<PatchShape> shapes;
  if (shape) {
    shapes.push_back(parse_patch_shape(*shape));
  } else {
    for (const std::string& s : f.shapes) shapes.push_back(parse_patch_shape(s));
  }

  SweepOptions opts;
  opts.only_step = step;
  opts.tolerance_frac = f.tolerance;
  opts.eye_margin_frac = f.eye_margin;
  opts.mouth_width_frac = f.mouth_width;
  opts.hierarchical = f.hierarchical;
  opts.refine_radius = f.refine_radius;
  opts.pyramid_min_dim = f.min_dim;
  opts.workers = f.workers > 0 ? f.workers : default_worker_count();

  const std::vector<Annotation> corpus = load_annotations(f.annotations);
  const TemplateLibrary lib = load_template_library(f.template_paths);
  const EvalReport report = run_sweep(corpus, methods, shapes, lib, opts);

  if (f.out_path.empty()) {
    report.write_tsv(out);
  } else {
    std::ofstream file(f.out_path, std::ios::binary);
    if (!file) throw IoError("cannot open " + f.out_path + " for writing");
    report.write_tsv(file);
  }
  return 0;
}

}  // namespace detail_cli

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"facefeat: eye and mouth detection by template matching"};
  app.require_subcommand(1);
  int exit_code = 0;

  // ---- build-template ------------------------------------------------
  auto* build = app.add_subcommand("build-template",
                                   "Average feature crops into a template file");
  struct {
    std::string list_path;
    std::string method = "grayscale";
    std::string feature;
    int size = 10;
    std::string out_path;
  } bt;
  build->add_option("--list", bt.list_path, "File listing one crop image per line")->required();
  build->add_option("--method", bt.method, "grayscale|haar")->required();
  build->add_option("--feature", bt.feature, "left_eye|right_eye|mouth")->required();
  build->add_option("--size", bt.size, "Template side length (default 10)");
  build->add_option("--out", bt.out_path, "Output template file")->required();
  build->callback([&] {
    const std::vector<std::string> paths = detail_cli::read_path_list(bt.list_path);
    if (paths.empty()) {
      throw InputError("crop list " + bt.list_path + " names no images");
    }
    std::vector<GrayImage> crops;
    crops.reserve(paths.size());
    for (const std::string& p : paths) crops.push_back(read_gray_any(p));
    const Template t = build_template(crops, parse_method(bt.method),
                                      parse_feature(bt.feature), bt.size);
    save_template(t, bt.out_path);
    double lo = t.values[0], hi = t.values[0];
    for (double v : t.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    out << "wrote " << bt.out_path << ": method=" << to_string(t.method)
        << " feature=" << to_string(t.feature) << " size=" << t.size
        << " samples=" << t.sample_count << " value_range=["
        << detail_cli::format_score(lo) << ", " << detail_cli::format_score(hi) << "]\n";
  });

  // ---- detect ----------------------------------------------------------
  auto* det = app.add_subcommand("detect", "Locate eyes and mouth inside a face box");
  struct {
    std::string image;
    std::vector<int> face;
    std::vector<int> points;
    std::string method = "grayscale";
    std::vector<std::string> template_paths;
    std::string shape = "rectangular";
    int step = 0;
    double eye_margin = 0.10;
    double mouth_width = 0.60;
    bool hierarchical = false;
    int refine_radius = 2;
    int min_dim = 20;
    int workers = 0;
  } dt;
  det->add_option("--image", dt.image, "Input image (PGM or PPM)")->required();
  auto* face_opt = det->add_option("--face", dt.face, "Face box as x,y,w,h")
                       ->delimiter(',')
                       ->expected(4);
  auto* points_opt = det->add_option("--points", dt.points,
                                     "Four face corner points as x1,y1,...,x4,y4")
                         ->delimiter(',')
                         ->expected(8);
  face_opt->excludes(points_opt);
  det->add_option("--method", dt.method, "grayscale|haar")->required();
  det->add_option("--template", dt.template_paths,
                  "Template file; repeat for all three features")
      ->required()
      ->expected(3);
  det->add_option("--shape", dt.shape, "Patch shape (default rectangular)");
  det->add_option("--step", dt.step, "Schedule reduction step (default 0)");
  det->add_option("--eye-margin", dt.eye_margin, "Eye region margin fraction (default 0.10)");
  det->add_option("--mouth-width", dt.mouth_width,
                  "Mouth region width fraction (default 0.60)");
  det->add_flag("--hierarchical", dt.hierarchical, "Coarse-to-fine pyramid scanning");
  det->add_option("--refine-radius", dt.refine_radius,
                  "Refinement radius per level (default 2)");
  det->add_option("--min-dim", dt.min_dim, "Pyramid minimum dimension (default 20)");
  det->add_option("--workers", dt.workers, "Worker threads (default: all cores)");
  det->callback([&] {
    if (dt.face.empty() && dt.points.empty()) {
      throw CLI::RequiredError("--face or --points");
    }
    const GrayImage gray = read_gray_any(dt.image);
    FaceBox face;
    if (!dt.face.empty()) {
      face = FaceBox::from_rect(Rect{dt.face[0], dt.face[1], dt.face[2], dt.face[3]});
    } else {
      std::array<Point, 4> pts;
      for (int i = 0; i < 4; ++i) pts[static_cast<std::size_t>(i)] = Point{dt.points[2 * i], dt.points[2 * i + 1]};
      face = FaceBox::from_points(pts);
    }
    const Method method = parse_method(dt.method);
    const TemplateLibrary lib = detail_cli::load_template_library(dt.template_paths);
    const FeatureTemplates templates = lib.triple(method);
    const PatchSpec spec =
        patch_schedule(parse_patch_shape(dt.shape), face.rect.w).at(static_cast<std::size_t>(dt.step));

    DetectOptions opts;
    opts.eye_margin_frac = dt.eye_margin;
    opts.mouth_width_frac = dt.mouth_width;
    opts.hierarchical = dt.hierarchical;
    opts.refine_radius = dt.refine_radius;
    opts.pyramid_min_dim = dt.min_dim;
    opts.workers = dt.workers > 0 ? dt.workers : default_worker_count();

    const DetectResult results = detect_gray(gray, face, method, spec, templates, opts);
    for (const FeatureDetection& d : results) {
      if (d.ok) {
        out << to_string(d.feature) << " " << d.match.patch.x << " " << d.match.patch.y << " "
            << d.match.patch.w << " " << d.match.patch.h << " "
            << detail_cli::format_score(d.match.score) << "\n";
      } else {
        err << to_string(d.feature) << " failed: " << d.error << "\n";
        exit_code = 1;
      }
    }
  });

  // ---- sweep / eval ----------------------------------------------------
  auto* sweep = app.add_subcommand("sweep",
                                   "Accuracy report over every schedule step");
  detail_cli::SweepFlags sf;
  detail_cli::add_sweep_flags(sweep, sf, false, nullptr, nullptr);
  sweep->callback([&] { detail_cli::run_sweep_command(sf, std::nullopt, std::nullopt, out); });

  auto* eval_cmd = app.add_subcommand("eval", "Accuracy report for a single patch config");
  detail_cli::SweepFlags ef;
  std::string eval_shape = "rectangular";
  int eval_step = 0;
  detail_cli::add_sweep_flags(eval_cmd, ef, true, &eval_shape, &eval_step);
  eval_cmd->callback(
      [&] { detail_cli::run_sweep_command(ef, eval_shape, eval_step, out); });

  // ---- gen-corpus --------------------------------------------------------
  auto* gen = app.add_subcommand("gen-corpus", "Write a seeded synthetic test corpus");
  struct {
    int count = 0;
    std::uint32_t seed = 1;
    std::string out_dir;
    int width = 512;
    int height = 768;
  } gc;
  gen->add_option("-n,--count", gc.count, "Number of images")
      ->required()
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", gc.seed, "PRNG seed (default 1)");
  gen->add_option("--out", gc.out_dir, "Output directory")->required();
  gen->add_option("--width", gc.width, "Image width (default 512)");
  gen->add_option("--height", gc.height, "Image height (default 768)");
  gen->callback([&] {
    CorpusOptions copts;
    copts.count = gc.count;
    copts.seed = gc.seed;
    copts.image_width = gc.width;
    copts.image_height = gc.height;
    const CorpusManifest m = gen_corpus(copts, gc.out_dir);
    out << "generated " << m.images.size() << " images under " << gc.out_dir << "\n";
    out << "annotations: " << m.annotation_file.string() << "\n";
    for (const auto& list : m.crop_lists) out << "crop list: " << list.string() << "\n";
  });

  // ---- parse & dispatch ------------------------------------------------
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("facefeat");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}

}  // namespace cli
}  // namespace facefeat
