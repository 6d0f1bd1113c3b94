#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "facefeat/errors.hpp"
#include "facefeat/face_model.hpp"
#include "facefeat/feature_template.hpp"
#include "facefeat/haar.hpp"
#include "facefeat/image.hpp"
#include "facefeat/parallel.hpp"
#include "facefeat/pyramid.hpp"
#include "facefeat/resample.hpp"

namespace facefeat {

// Best patch found for one feature. The score is the correlation
// coefficient, in [-1, 1]; flat (zero-variance) windows score 0.
struct MatchResult {
  Feature feature = Feature::left_eye;
  Rect patch;
  double score = 0.0;
  Method method = Method::grayscale;
  PatchSpec spec;
};

namespace detail {

// Template-side terms of the correlation, computed once per scan.
struct TemplateStats {
  int size = 0;
  std::vector<double> centered;  // w - mean(w)
  double norm = 0.0;             // sqrt(sum of squared deviations)

  explicit TemplateStats(const Template& t) : size(t.size) {
    const std::size_t n = t.values.size();
    double sum = 0.0;
    for (double v : t.values) sum += v;
    const double mean = sum / static_cast<double>(n);
    centered.resize(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      centered[i] = t.values[i] - mean;
      sq += centered[i] * centered[i];
    }
    norm = std::sqrt(sq);
  }
};

// Correlation coefficient between `n*n` window values and the prepared
// template terms. Either side flat -> 0 (no evidence, not NaN).
inline double ncc_values(const double* f, const TemplateStats& stats) {
  const std::size_t n = static_cast<std::size_t>(stats.size) * stats.size;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += f[i];
  const double mean = sum / static_cast<double>(n);
  double cross = 0.0;
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = f[i] - mean;
    cross += d * stats.centered[i];
    var += d * d;
  }
  if (var == 0.0 || stats.norm == 0.0) return 0.0;
  return cross / (std::sqrt(var) * stats.norm);
}

// Scores one patch position: the window under the patch is resampled down
// to the template size in a reusable scratch buffer, then correlated.
class WindowScorer {
 public:
  WindowScorer(const GrayImage& img, int patch_w, int patch_h, const TemplateStats& stats)
      : img_(img),
        stats_(stats),
        xtaps_(make_axis_taps(patch_w, stats.size)),
        ytaps_(make_axis_taps(patch_h, stats.size)),
        resized_(static_cast<std::size_t>(stats.size) * stats.size) {}

  double score_at(int x, int y) {
    resample_window(img_, x, y, xtaps_, ytaps_, resized_.data());
    return ncc_values(resized_.data(), stats_);
  }

 private:
  const GrayImage& img_;
  const TemplateStats& stats_;
  std::vector<AxisTap> xtaps_;
  std::vector<AxisTap> ytaps_;
  std::vector<double> resized_;
};

struct BestHit {
  double score = -std::numeric_limits<double>::infinity();
  int x = 0;
  int y = 0;
};

// Exhaustive row-major scan over the given top-left positions. Strictly
// greater wins, so the first occurrence of the maximum is kept; merging the
// per-chunk partials in chunk order preserves that tie-break for any worker
// count.
inline BestHit scan_positions(const GrayImage& img, int x0, int y0, int nx, int ny,
                              int patch_w, int patch_h, const TemplateStats& stats,
                              int workers) {
  std::vector<BestHit> partials(static_cast<std::size_t>(std::max(1, std::min(workers, ny))));
  run_chunked(ny, workers, [&](int begin, int end, int chunk) {
    WindowScorer scorer(img, patch_w, patch_h, stats);
    BestHit best;
    for (int j = begin; j < end; ++j) {
      const int y = y0 + j;
      for (int i = 0; i < nx; ++i) {
        const double s = scorer.score_at(x0 + i, y);
        if (s > best.score) best = BestHit{s, x0 + i, y};
      }
    }
    partials[static_cast<std::size_t>(chunk)] = best;
  });
  BestHit best = partials[0];
  for (std::size_t c = 1; c < partials.size(); ++c) {
    if (partials[c].score > best.score) best = partials[c];
  }
  return best;
}

// Scores every position in the grid, in parallel, one slot per position.
inline std::vector<BestHit> scan_collect(const GrayImage& img, int x0, int y0, int nx,
                                         int ny, int patch_w, int patch_h,
                                         const TemplateStats& stats, int workers) {
  std::vector<BestHit> hits(static_cast<std::size_t>(nx) * ny);
  run_chunked(ny, workers, [&](int begin, int end, int) {
    WindowScorer scorer(img, patch_w, patch_h, stats);
    for (int j = begin; j < end; ++j) {
      for (int i = 0; i < nx; ++i) {
        const int x = x0 + i, y = y0 + j;
        hits[static_cast<std::size_t>(j) * nx + i] = BestHit{scorer.score_at(x, y), x, y};
      }
    }
  });
  return hits;
}

// score desc, then y asc, then x asc: the row-major-first-max order.
inline bool better_hit(const BestHit& a, const BestHit& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.y != b.y) return a.y < b.y;
  return a.x < b.x;
}

// Top-k local maxima with non-maximum suppression: candidates closer than
// (sep_x, sep_y) to an already kept one belong to the same basin.
inline std::vector<BestHit> top_candidates(std::vector<BestHit> hits, int k, int sep_x,
                                           int sep_y) {
  std::sort(hits.begin(), hits.end(), better_hit);
  std::vector<BestHit> kept;
  for (const BestHit& h : hits) {
    bool suppressed = false;
    for (const BestHit& c : kept) {
      if (std::abs(h.x - c.x) < sep_x && std::abs(h.y - c.y) < sep_y) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept.push_back(h);
      if (static_cast<int>(kept.size()) == k) break;
    }
  }
  return kept;
}

inline void check_scan_args(const GrayImage& img, const Rect& region, int patch_w,
                            int patch_h) {
  if (!img.bounds().contains(region) || region.w < 1 || region.h < 1) {
    throw BoundsError("scan region " + to_string(region) + " outside image " +
                      std::to_string(img.width()) + "x" + std::to_string(img.height()));
  }
  if (patch_w < 1 || patch_h < 1) {
    throw InputError("patch dimensions must be positive");
  }
  if (patch_w > region.w || patch_h > region.h) {
    throw SizeError("patch " + std::to_string(patch_w) + "x" + std::to_string(patch_h) +
                    " larger than scan region " + to_string(region));
  }
}

}  // namespace detail

// Correlation coefficient of a window against a template of the same size.
inline double ncc(const GrayImage& window, const Template& t) {
  if (window.width() != t.size || window.height() != t.size) {
    throw SizeError("window " + std::to_string(window.width()) + "x" +
                    std::to_string(window.height()) + " does not match template size " +
                    std::to_string(t.size));
  }
  detail::TemplateStats stats(t);
  return detail::ncc_values(window.values().data(), stats);
}

// Scans patch_w x patch_h windows over every position inside `region`
// (pixel by pixel, top-left to bottom-right), resizing each window to the
// template size and keeping the highest-scoring position. Ties keep the
// first position in row-major order. No early exit.
inline MatchResult scan_region(const GrayImage& img, const Rect& region, int patch_w,
                               int patch_h, const Template& t, int workers = 1) {
  detail::check_scan_args(img, region, patch_w, patch_h);
  detail::TemplateStats stats(t);
  detail::BestHit best =
      detail::scan_positions(img, region.x, region.y, region.w - patch_w + 1,
                             region.h - patch_h + 1, patch_w, patch_h, stats, workers);
  MatchResult r;
  r.feature = t.feature;
  r.method = t.method;
  r.patch = Rect{best.x, best.y, patch_w, patch_h};
  r.score = best.score;
  return r;
}

// Coarse-to-fine variant: an exhaustive scan on the coarsest usable pyramid
// level collects a few separated candidate positions, and every finer level
// rescans each candidate inside a +-refine_radius window around its doubled
// position. The best full-resolution rescore wins, so the returned patch
// and score are at level 0. With a single-level pyramid this is exactly
// scan_region.
inline MatchResult scan_hierarchical(const Pyramid& pyr, const Rect& region, int patch_w,
                                     int patch_h, const Template& t, int refine_radius = 2,
                                     int workers = 1) {
  if (pyr.levels.empty()) throw InputError("empty pyramid");
  if (refine_radius < 1) throw InputError("refine_radius must be at least 1");
  detail::check_scan_args(pyr.level(0), region, patch_w, patch_h);

  struct LevelGeom {
    Rect region;
    int patch_w;
    int patch_h;
  };
  auto level_geom = [&](int k) -> std::optional<LevelGeom> {
    const GrayImage& img = pyr.level(k);
    Rect r{region.x >> k, region.y >> k, std::max(1, region.w >> k),
           std::max(1, region.h >> k)};
    r.x = std::min(r.x, img.width() - 1);
    r.y = std::min(r.y, img.height() - 1);
    r.w = std::min(r.w, img.width() - r.x);
    r.h = std::min(r.h, img.height() - r.y);
    const int pw = k == 0 ? patch_w : std::max(patch_w >> k, 4);
    const int ph = k == 0 ? patch_h : std::max(patch_h >> k, 4);
    if (pw > r.w || ph > r.h) return std::nullopt;
    return LevelGeom{r, pw, ph};
  };

  // Pick the deepest start level whose scaled patch still carries about as
  // much information as the template needs (4/5 of its pixel count); with
  // less, amplitude-invariant correlation against coarse noise becomes a
  // coin toss and the descent can commit to a false peak. Band-pass (haar)
  // templates hold fine-scale signed bands whose correlation degrades fast
  // under downsampling, so they start no deeper than half resolution.
  const int min_start_area = 4 * t.size * t.size / 5;
  const int max_start = t.method == Method::haar ? 1 : pyr.level_count() - 1;
  int start = 0;
  for (int k = std::min(max_start, pyr.level_count() - 1); k > 0; --k) {
    if ((patch_w >> k) * (patch_h >> k) < min_start_area) continue;
    if (level_geom(k)) {
      start = k;
      break;
    }
  }

  detail::TemplateStats stats(t);

  // The haar operator has a 2 px support, so its correlation peak can sit
  // that far from the downsampled one in level coordinates; doubled and
  // added to the grid rounding this is a 5 px hand-off uncertainty, hence
  // the wider window for band-pass templates.
  const int radius = t.method == Method::haar ? refine_radius + 4 : refine_radius;

  auto as_result = [&](const detail::BestHit& best) {
    MatchResult r;
    r.feature = t.feature;
    r.method = t.method;
    r.patch = Rect{best.x, best.y, patch_w, patch_h};
    r.score = best.score;
    return r;
  };

  // Degenerate hierarchy: one full scan at level 0, bit-identical to
  // scan_region.
  if (start == 0) {
    return as_result(detail::scan_positions(pyr.level(0), region.x, region.y,
                                            region.w - patch_w + 1, region.h - patch_h + 1,
                                            patch_w, patch_h, stats, workers));
  }

  // Exhaustive scan at the start level, keeping several separated candidate
  // basins. Coarse correlation can rank a lookalike structure (a brow bar
  // against an eye bar, say) above the true feature, so committing to a
  // single coarse argmax descends into the wrong basin; the final level-0
  // rescoring picks the right one out of a handful. The suppression box is
  // a quarter patch: stacked lookalikes sit closer than half a patch apart.
  constexpr int kCandidates = 8;
  const LevelGeom g0 = *level_geom(start);
  std::vector<detail::BestHit> candidates = detail::top_candidates(
      detail::scan_collect(pyr.level(start), g0.region.x, g0.region.y,
                           g0.region.w - g0.patch_w + 1, g0.region.h - g0.patch_h + 1,
                           g0.patch_w, g0.patch_h, stats, workers),
      kCandidates, std::max(2, g0.patch_w / 4), std::max(2, g0.patch_h / 4));

  for (int k = start - 1; k >= 0; --k) {
    for (detail::BestHit& c : candidates) {
      c.x *= 2;
      c.y *= 2;
    }
    const std::optional<LevelGeom> g = level_geom(k);
    if (!g) continue;  // level 0 is always feasible, so a result is guaranteed
    const int px_lo = g->region.x, px_hi = g->region.x + g->region.w - g->patch_w;
    const int py_lo = g->region.y, py_hi = g->region.y + g->region.h - g->patch_h;

    std::vector<detail::BestHit> refined;
    refined.reserve(candidates.size());
    for (const detail::BestHit& c : candidates) {
      int x0 = std::max(px_lo, c.x - radius);
      int x1 = std::min(px_hi, c.x + radius);
      if (x0 > x1) x0 = x1 = std::clamp(c.x, px_lo, px_hi);
      int y0 = std::max(py_lo, c.y - radius);
      int y1 = std::min(py_hi, c.y + radius);
      if (y0 > y1) y0 = y1 = std::clamp(c.y, py_lo, py_hi);
      refined.push_back(detail::scan_positions(pyr.level(k), x0, y0, x1 - x0 + 1,
                                               y1 - y0 + 1, g->patch_w, g->patch_h, stats,
                                               workers));
    }
    // windows converging on the same position collapse into one candidate
    std::sort(refined.begin(), refined.end(), detail::better_hit);
    candidates.clear();
    for (const detail::BestHit& h : refined) {
      bool dup = false;
      for (const detail::BestHit& c : candidates) {
        if (c.x == h.x && c.y == h.y) {
          dup = true;
          break;
        }
      }
      if (!dup) candidates.push_back(h);
    }
  }

  return as_result(candidates.front());
}

// Pyramid for hierarchical scanning under a preprocessing method. The
// grayscale image is downsampled first and the Haar band computed per
// level: block-averaging a signed sub-band cancels its alternating rows,
// so downsampling the transformed image would starve the coarse levels.
// Level 0 equals the plain preprocessed image.
inline Pyramid build_method_pyramid(const GrayImage& gray, Method method, int min_dim) {
  Pyramid pyr = build_pyramid(gray, min_dim);
  if (method == Method::haar) {
    for (GrayImage& level : pyr.levels) level = haar_horizontal(level);
  }
  return pyr;
}

// The three templates a detection run needs, one per feature.
struct FeatureTemplates {
  Template left_eye;
  Template right_eye;
  Template mouth;

  const Template& for_feature(Feature f) const {
    switch (f) {
      case Feature::left_eye: return left_eye;
      case Feature::right_eye: return right_eye;
      default: return mouth;
    }
  }
};

struct DetectOptions {
  double eye_margin_frac = 0.10;
  double mouth_width_frac = 0.60;
  bool hierarchical = false;
  int refine_radius = 2;
  int pyramid_min_dim = 20;
  int workers = 1;
};

// Per-feature outcome; a failed feature carries the error message instead
// of a match and does not abort the other features.
struct FeatureDetection {
  Feature feature = Feature::left_eye;
  bool ok = false;
  MatchResult match;
  std::string error;
};

using DetectResult = std::array<FeatureDetection, 3>;  // left_eye, right_eye, mouth

// Full per-face pipeline on an already-grayscale image: preprocess once for
// the method, partition the face box, then scan each feature's region with
// that feature's patch size.
inline DetectResult detect_gray(const GrayImage& gray, const FaceBox& face, Method method,
                                const PatchSpec& spec, const FeatureTemplates& templates,
                                const DetectOptions& options = {}) {
  for (Feature f : kAllFeatures) {
    const Template& t = templates.for_feature(f);
    if (t.method != method) {
      throw InputError(std::string("template for ") + to_string(f) + " was built with method " +
                       to_string(t.method) + ", expected " + to_string(method));
    }
    if (t.feature != f) {
      throw InputError(std::string("template tagged ") + to_string(t.feature) +
                       " supplied for feature " + to_string(f));
    }
  }

  const GrayImage work = method == Method::haar ? haar_horizontal(gray) : gray;
  const FacePartition part = partition(face, gray.width(), gray.height(),
                                       options.eye_margin_frac, options.mouth_width_frac);

  std::optional<Pyramid> pyr;
  if (options.hierarchical) {
    pyr = build_method_pyramid(gray, method, options.pyramid_min_dim);
  }

  auto run_one = [&](Feature f, const Rect& region) {
    FeatureDetection d;
    d.feature = f;
    const bool is_mouth = f == Feature::mouth;
    const int pw = spec.width_for(is_mouth);
    const int ph = spec.height_for(is_mouth);
    try {
      MatchResult m = options.hierarchical
                          ? scan_hierarchical(*pyr, region, pw, ph, templates.for_feature(f),
                                              options.refine_radius, options.workers)
                          : scan_region(work, region, pw, ph, templates.for_feature(f),
                                        options.workers);
      m.feature = f;
      m.method = method;
      m.spec = spec;
      d.match = m;
      d.ok = true;
    } catch (const Error& e) {
      d.error = e.what();
    }
    return d;
  };

  return DetectResult{run_one(Feature::left_eye, part.left_eye),
                      run_one(Feature::right_eye, part.right_eye),
                      run_one(Feature::mouth, part.mouth)};
}

inline DetectResult detect(const RgbImage& img, const FaceBox& face, Method method,
                           const PatchSpec& spec, const FeatureTemplates& templates,
                           const DetectOptions& options = {}) {
  return detect_gray(to_grayscale(img), face, method, spec, templates, options);
}

}  // namespace facefeat
