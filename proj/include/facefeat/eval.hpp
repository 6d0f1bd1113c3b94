#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "facefeat/errors.hpp"
#include "facefeat/face_model.hpp"
#include "facefeat/feature_template.hpp"
#include "facefeat/image.hpp"
#include "facefeat/matcher.hpp"
#include "facefeat/parallel.hpp"
#include "facefeat/pnm.hpp"

namespace facefeat {

enum class FaceClass { normal, long_hair, spectacles };

constexpr std::array<FaceClass, 3> kAllClasses{FaceClass::normal, FaceClass::long_hair,
                                               FaceClass::spectacles};

inline const char* to_string(FaceClass c) {
  switch (c) {
    case FaceClass::normal: return "normal";
    case FaceClass::long_hair: return "long_hair";
    default: return "spectacles";
  }
}

inline FaceClass parse_face_class(const std::string& s) {
  if (s == "normal") return FaceClass::normal;
  if (s == "long_hair") return FaceClass::long_hair;
  if (s == "spectacles") return FaceClass::spectacles;
  throw InputError("unknown class \"" + s + "\" (expected normal, long_hair or spectacles)");
}

// One ground-truth record: the annotated face corners plus tight boxes
// around each feature (eye with brows, mouth with nostrils).
struct Annotation {
  std::string image_path;
  std::array<Point, 4> face_points{};
  Rect gt_left_eye;
  Rect gt_right_eye;
  Rect gt_mouth;
  FaceClass face_class = FaceClass::normal;

  const Rect& gt_for(Feature f) const {
    switch (f) {
      case Feature::left_eye: return gt_left_eye;
      case Feature::right_eye: return gt_right_eye;
      default: return gt_mouth;
    }
  }
};

// Text format, one record per line, '#' comments and blank lines allowed:
//   <image> <x1> <y1> <x2> <y2> <x3> <y3> <x4> <y4>
//           <le_x> <le_y> <le_w> <le_h> <re_x> <re_y> <re_w> <re_h>
//           <m_x> <m_y> <m_w> <m_h> <class>
inline std::vector<Annotation> parse_annotations(std::istream& in,
                                                 const std::string& source_name) {
  std::vector<Annotation> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string::size_type hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    Annotation a;
    if (!(row >> a.image_path)) continue;  // blank or comment-only line

    auto fail = [&](const std::string& what) {
      throw FormatError(source_name + ": line " + std::to_string(line_no) + ": " + what);
    };
    std::array<int, 20> v{};
    for (int i = 0; i < 20; ++i) {
      if (!(row >> v[static_cast<std::size_t>(i)])) fail("expected 20 integer fields after the image path");
    }
    std::string cls;
    if (!(row >> cls)) fail("missing class field");
    std::string extra;
    if (row >> extra) fail("trailing token \"" + extra + "\"");

    for (int i = 0; i < 4; ++i) a.face_points[static_cast<std::size_t>(i)] = Point{v[2 * i], v[2 * i + 1]};
    a.gt_left_eye = Rect{v[8], v[9], v[10], v[11]};
    a.gt_right_eye = Rect{v[12], v[13], v[14], v[15]};
    a.gt_mouth = Rect{v[16], v[17], v[18], v[19]};
    for (const Rect* r : {&a.gt_left_eye, &a.gt_right_eye, &a.gt_mouth}) {
      if (r->w < 1 || r->h < 1) fail("ground-truth box " + to_string(*r) + " has empty extent");
    }
    try {
      a.face_class = parse_face_class(cls);
    } catch (const InputError& e) {
      fail(e.what());
    }
    out.push_back(std::move(a));
  }
  return out;
}

// Relative image paths are resolved against the annotation file's directory.
inline std::vector<Annotation> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Annotation> anns = parse_annotations(in, path.filename().string());
  const std::filesystem::path dir = path.parent_path();
  for (Annotation& a : anns) {
    std::filesystem::path p(a.image_path);
    if (p.is_relative() && !dir.empty()) a.image_path = (dir / p).string();
  }
  return anns;
}

// Detection counts as a pass when the ground-truth box lies within the
// detected patch grown by tolerance_frac of the patch dimension on each
// side; a small overshoot is not significant.
inline bool judge(const Rect& detected, const Rect& gt, double tolerance_frac) {
  if (tolerance_frac < 0.0 || tolerance_frac >= 1.0) {
    throw InputError("tolerance_frac must be in [0, 1)");
  }
  const double ex = tolerance_frac * detected.w;
  const double ey = tolerance_frac * detected.h;
  return gt.x >= detected.x - ex && gt.right() <= detected.right() + ex &&
         gt.y >= detected.y - ey && gt.bottom() <= detected.bottom() + ey;
}

inline double accuracy(int passes, int total) {
  if (total < 1) throw InputError("accuracy needs total >= 1");
  if (passes < 0 || passes > total) throw InputError("passes must be in [0, total]");
  return 100.0 * passes / total;
}

// Mean of the three per-class accuracies (normal, long front hair, spectacles).
inline double class_average(double nf, double flh, double fs) {
  return (nf + flh + fs) / 3.0;
}

// Templates indexed by (method, feature).
class TemplateLibrary {
 public:
  void add(Template t) { map_[key(t.method, t.feature)] = std::move(t); }

  const Template* find(Method m, Feature f) const {
    auto it = map_.find(key(m, f));
    return it == map_.end() ? nullptr : &it->second;
  }

  FeatureTemplates triple(Method m) const {
    FeatureTemplates ts;
    for (Feature f : kAllFeatures) {
      const Template* t = find(m, f);
      if (!t) {
        throw InputError(std::string("no template for method ") + to_string(m) +
                         ", feature " + to_string(f));
      }
      if (f == Feature::left_eye) ts.left_eye = *t;
      else if (f == Feature::right_eye) ts.right_eye = *t;
      else ts.mouth = *t;
    }
    return ts;
  }

  // Common size across all stored templates (the report header needs one).
  int template_size() const {
    int size = 0;
    for (const auto& [k, t] : map_) {
      if (size == 0) size = t.size;
      else if (t.size != size) throw InputError("templates have mixed sizes");
    }
    return size;
  }

  bool empty() const { return map_.empty(); }

 private:
  static int key(Method m, Feature f) { return static_cast<int>(m) * 8 + static_cast<int>(f); }
  std::map<int, Template> map_;
};

struct SweepOptions {
  std::optional<int> only_step;  // run just this reduction step
  double tolerance_frac = 0.10;
  double eye_margin_frac = 0.10;
  double mouth_width_frac = 0.60;
  bool hierarchical = false;
  int refine_radius = 2;
  int pyramid_min_dim = 20;
  int workers = 1;  // parallelism across corpus images
};

// One aggregated cell of the report.
struct EvalCell {
  Method method = Method::grayscale;
  PatchShape shape = PatchShape::rectangular;
  int step = 0;
  Feature feature = Feature::left_eye;
  FaceClass face_class = FaceClass::normal;
  int passes = 0;
  int total = 0;
};

struct EvalReport {
  double tolerance_frac = 0.10;
  double eye_margin_frac = 0.10;
  double mouth_width_frac = 0.60;
  int template_size = 10;
  std::vector<EvalCell> cells;  // canonical (method, shape, step, feature, class) order
  std::vector<std::string> warnings;

  const EvalCell* find_cell(Method m, PatchShape s, int step, Feature f, FaceClass c) const {
    for (const EvalCell& cell : cells) {
      if (cell.method == m && cell.shape == s && cell.step == step && cell.feature == f &&
          cell.face_class == c) {
        return &cell;
      }
    }
    return nullptr;
  }

  // Mean accuracy over the classes that have data, per the class-average rule.
  std::optional<double> average_accuracy(Method m, PatchShape s, int step, Feature f) const {
    double sum = 0.0;
    int classes = 0;
    for (FaceClass c : kAllClasses) {
      const EvalCell* cell = find_cell(m, s, step, f, c);
      if (cell && cell->total > 0) {
        sum += accuracy(cell->passes, cell->total);
        ++classes;
      }
    }
    if (classes == 0) return std::nullopt;
    return sum / classes;
  }

  void write_tsv(std::ostream& out) const;
};

namespace detail {

inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace detail

inline void EvalReport::write_tsv(std::ostream& out) const {
  out << "# tolerance_frac=" << detail::format_fixed(tolerance_frac, 2)
      << " eye_margin_frac=" << detail::format_fixed(eye_margin_frac, 2)
      << " mouth_width_frac=" << detail::format_fixed(mouth_width_frac, 2)
      << " template_size=" << template_size << "\n";
  for (const std::string& w : warnings) out << "# warning: " << w << "\n";
  out << "method\tshape\tstep\tfeature\tclass\tpasses\ttotal\taccuracy\n";

  auto row = [&](const EvalCell& c, const char* cls, int passes, int total,
                 std::optional<double> acc) {
    out << to_string(c.method) << "\t" << to_string(c.shape) << "\t" << c.step << "\t"
        << to_string(c.feature) << "\t" << cls << "\t" << passes << "\t" << total << "\t"
        << (acc ? detail::format_fixed(*acc, 2) : std::string("-")) << "\n";
  };

  for (std::size_t i = 0; i < cells.size(); ++i) {
    const EvalCell& c = cells[i];
    row(c, to_string(c.face_class), c.passes, c.total,
        c.total > 0 ? std::optional<double>(accuracy(c.passes, c.total)) : std::nullopt);
    // After the last class of a (method, shape, step, feature) block, emit
    // the class-averaged row.
    const bool block_end = (i + 1 == cells.size()) || cells[i + 1].feature != c.feature ||
                           cells[i + 1].step != c.step || cells[i + 1].shape != c.shape ||
                           cells[i + 1].method != c.method;
    if (block_end) {
      int passes = 0, total = 0;
      for (std::size_t j = i; j < cells.size(); --j) {
        const EvalCell& b = cells[j];
        if (b.feature != c.feature || b.step != c.step || b.shape != c.shape ||
            b.method != c.method) {
          break;
        }
        passes += b.passes;
        total += b.total;
        if (j == 0) break;
      }
      row(c, "average", passes, total, average_accuracy(c.method, c.shape, c.step, c.feature));
    }
  }
}

// Runs detection over the whole corpus for every requested method x shape x
// schedule step and judges each feature against its ground truth. Rows are
// keyed like the accuracy tables: per class plus the class average.
//
// Unreadable images are skipped with a warning and excluded from totals. A
// per-feature detection error counts as a failed detection for that cell.
inline EvalReport run_sweep(const std::vector<Annotation>& corpus,
                            const std::vector<Method>& methods,
                            const std::vector<PatchShape>& shapes,
                            const TemplateLibrary& templates, const SweepOptions& options) {
  EvalReport report;
  report.tolerance_frac = options.tolerance_frac;
  report.eye_margin_frac = options.eye_margin_frac;
  report.mouth_width_frac = options.mouth_width_frac;
  report.template_size = templates.empty() ? 0 : templates.template_size();

  // Canonical enumeration order regardless of the caller's list order.
  auto wants_method = [&](Method m) {
    return std::find(methods.begin(), methods.end(), m) != methods.end();
  };
  auto wants_shape = [&](PatchShape s) {
    return std::find(shapes.begin(), shapes.end(), s) != shapes.end();
  };
  std::vector<Method> run_methods;
  for (Method m : {Method::grayscale, Method::haar}) {
    if (wants_method(m)) run_methods.push_back(m);
  }
  std::vector<PatchShape> run_shapes;
  for (PatchShape s : {PatchShape::rectangular, PatchShape::square}) {
    if (wants_shape(s)) run_shapes.push_back(s);
  }

  struct Combo {
    Method method;
    PatchShape shape;
    int step;
  };
  std::vector<Combo> combos;
  for (Method m : run_methods) {
    for (PatchShape s : run_shapes) {
      const int steps = s == PatchShape::rectangular ? 4 : 3;
      for (int step = 0; step < steps; ++step) {
        if (options.only_step && *options.only_step != step) continue;
        combos.push_back(Combo{m, s, step});
      }
    }
  }

  for (Method m : run_methods) (void)templates.triple(m);  // fail fast on missing templates

  struct ImageOutcome {
    bool skipped = false;
    std::string warning;
    // pass flag per (combo, feature)
    std::vector<std::array<bool, 3>> passed;
  };
  std::vector<ImageOutcome> outcomes(corpus.size());

  run_chunked(static_cast<int>(corpus.size()), options.workers, [&](int begin, int end, int) {
    for (int idx = begin; idx < end; ++idx) {
      const Annotation& ann = corpus[static_cast<std::size_t>(idx)];
      ImageOutcome& res = outcomes[static_cast<std::size_t>(idx)];
      res.passed.assign(combos.size(), {false, false, false});

      GrayImage gray;
      try {
        gray = read_gray_any(ann.image_path);
      } catch (const Error& e) {
        res.skipped = true;
        res.warning = std::string("skipped ") + ann.image_path + ": " + e.what();
        continue;
      }

      const FaceBox face = FaceBox::from_points(ann.face_points);
      FacePartition part;
      try {
        part = partition(face, gray.width(), gray.height(), options.eye_margin_frac,
                         options.mouth_width_frac);
      } catch (const Error& e) {
        res.skipped = true;
        res.warning = std::string("skipped ") + ann.image_path + ": " + e.what();
        continue;
      }

      std::optional<GrayImage> haar_img;
      auto work_for = [&](Method m) -> const GrayImage& {
        if (m == Method::grayscale) return gray;
        if (!haar_img) haar_img = haar_horizontal(gray);
        return *haar_img;
      };

      std::optional<Pyramid> pyramids[2];
      auto pyramid_for = [&](Method m) -> const Pyramid& {
        auto& slot = pyramids[m == Method::grayscale ? 0 : 1];
        if (!slot) slot = build_method_pyramid(gray, m, options.pyramid_min_dim);
        return *slot;
      };

      for (std::size_t ci = 0; ci < combos.size(); ++ci) {
        const Combo& combo = combos[ci];
        const PatchSpec spec = patch_schedule(combo.shape, face.rect.w)
            [static_cast<std::size_t>(combo.step)];
        const GrayImage& work = work_for(combo.method);
        for (std::size_t fi = 0; fi < kAllFeatures.size(); ++fi) {
          const Feature f = kAllFeatures[fi];
          const bool is_mouth = f == Feature::mouth;
          const Rect& region = f == Feature::left_eye   ? part.left_eye
                               : f == Feature::right_eye ? part.right_eye
                                                         : part.mouth;
          const Template* t = templates.find(combo.method, f);
          try {
            MatchResult match =
                options.hierarchical
                    ? scan_hierarchical(pyramid_for(combo.method), region,
                                        spec.width_for(is_mouth), spec.height_for(is_mouth),
                                        *t, options.refine_radius, 1)
                    : scan_region(work, region, spec.width_for(is_mouth),
                                  spec.height_for(is_mouth), *t, 1);
            res.passed[ci][fi] = judge(match.patch, ann.gt_for(f), options.tolerance_frac);
          } catch (const Error&) {
            res.passed[ci][fi] = false;  // undetectable counts as a failed detection
          }
        }
      }
    }
  });

  // Aggregate in canonical order; counts are order-independent, warnings
  // follow corpus order.
  for (const ImageOutcome& o : outcomes) {
    if (!o.warning.empty()) report.warnings.push_back(o.warning);
  }
  for (const Combo& combo : combos) {
    for (Feature f : kAllFeatures) {
      for (FaceClass c : kAllClasses) {
        EvalCell cell;
        cell.method = combo.method;
        cell.shape = combo.shape;
        cell.step = combo.step;
        cell.feature = f;
        cell.face_class = c;
        report.cells.push_back(cell);
      }
    }
  }
  for (std::size_t idx = 0; idx < corpus.size(); ++idx) {
    const ImageOutcome& o = outcomes[idx];
    if (o.skipped) continue;
    const FaceClass c = corpus[idx].face_class;
    for (std::size_t ci = 0; ci < combos.size(); ++ci) {
      for (std::size_t fi = 0; fi < kAllFeatures.size(); ++fi) {
        const std::size_t row = ci * 9 + fi * 3 + static_cast<std::size_t>(c);
        report.cells[row].total += 1;
        if (o.passed[ci][fi]) report.cells[row].passes += 1;
      }
    }
  }
  return report;
}

}  // namespace facefeat
