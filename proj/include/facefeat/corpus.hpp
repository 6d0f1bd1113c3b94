#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "facefeat/errors.hpp"
#include "facefeat/eval.hpp"
#include "facefeat/face_model.hpp"
#include "facefeat/image.hpp"
#include "facefeat/pnm.hpp"

// Seeded synthetic face corpus for self-contained testing: textured
// backgrounds with an eye/eye/mouth archetype planted inside each scan
// region, plus ground-truth boxes, per-feature crop lists for template
// building and one annotation file.

namespace facefeat {

struct CorpusOptions {
  int count = 20;
  std::uint32_t seed = 1;
  int image_width = 512;
  int image_height = 768;
  // Planted patterns are placed so they stay scannable with these margins.
  double eye_margin_frac = 0.10;
  double mouth_width_frac = 0.60;
  // Ground-truth box size relative to the planted pattern. At 0.93 the
  // original rectangular patch contains the box with room to spare while
  // the 30%-reduced patch can never cover it.
  double gt_frac = 0.93;
};

struct CorpusManifest {
  std::filesystem::path annotation_file;
  std::array<std::filesystem::path, 3> crop_lists;  // left_eye, right_eye, mouth
  std::vector<std::filesystem::path> images;
};

namespace detail {

// mt19937 is fully specified, so drawing through the raw engine keeps the
// corpus byte-identical across standard libraries.
inline int rand_int(std::mt19937& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint32_t>(hi - lo + 1));
}

inline double rand_real(std::mt19937& rng, double lo, double hi) {
  return lo + (hi - lo) * (rng() / 4294967296.0);
}

inline void add_clamped(GrayImage& img, int x, int y, double delta) {
  double v = img.at(x, y) + delta;
  img.at(x, y) = v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v);
}

// Eye archetype: brow band, dark elliptical eye with an iris core. Drawn in
// coordinates normalized to the pattern footprint.
inline void draw_eye_pattern(GrayImage& img, const Rect& r) {
  for (int y = 0; y < r.h; ++y) {
    const double v = (y + 0.5) / r.h;
    for (int x = 0; x < r.w; ++x) {
      const double u = (x + 0.5) / r.w;
      double delta = 0.0;
      if (v >= 0.16 && v <= 0.30 && u >= 0.12 && u <= 0.88) delta -= 55.0;  // brow
      const double eu = (u - 0.5) / 0.34;
      const double ev = (v - 0.58) / 0.16;
      if (eu * eu + ev * ev <= 1.0) delta -= 85.0;  // eye
      const double iu = (u - 0.5) / 0.10;
      const double iv = (v - 0.58) / 0.13;
      if (iu * iu + iv * iv <= 1.0) delta -= 45.0;  // iris
      if (delta != 0.0) add_clamped(img, r.x + x, r.y + y, delta);
    }
  }
}

// Mouth archetype: nostril pair above a wide lip ellipse with a darker
// center line.
inline void draw_mouth_pattern(GrayImage& img, const Rect& r) {
  for (int y = 0; y < r.h; ++y) {
    const double v = (y + 0.5) / r.h;
    for (int x = 0; x < r.w; ++x) {
      const double u = (x + 0.5) / r.w;
      double delta = 0.0;
      for (double cx : {0.38, 0.62}) {
        const double nu = (u - cx) / 0.05;
        const double nv = (v - 0.18) / 0.08;
        if (nu * nu + nv * nv <= 1.0) delta -= 50.0;  // nostril
      }
      const double lu = (u - 0.5) / 0.38;
      const double lv = (v - 0.58) / 0.17;
      if (lu * lu + lv * lv <= 1.0) delta -= 80.0;  // lips
      if (v >= 0.54 && v <= 0.62 && u >= 0.14 && u <= 0.86) delta -= 30.0;  // lip line
      if (delta != 0.0) add_clamped(img, r.x + x, r.y + y, delta);
    }
  }
}

inline Rect centered_gt_box(const Rect& pattern, double gt_frac) {
  const int gw = std::max(1, round_half_away(gt_frac * pattern.w));
  const int gh = std::max(1, round_half_away(gt_frac * pattern.h));
  return Rect{pattern.x + round_half_away((pattern.w - gw) / 2.0),
              pattern.y + round_half_away((pattern.h - gh) / 2.0), gw, gh};
}

}  // namespace detail

inline CorpusManifest gen_corpus(const CorpusOptions& options,
                                 const std::filesystem::path& out_dir) {
  if (options.count < 1) throw InputError("corpus count must be at least 1");
  if (options.image_width < 128 || options.image_height < 160) {
    throw InputError("corpus images must be at least 128x160");
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "crops", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "crops").string() + ": " + ec.message());

  std::mt19937 rng(options.seed);

  std::ofstream ann_out(out_dir / "annotations.txt", std::ios::binary);
  if (!ann_out) throw IoError("cannot open annotation file for writing");
  ann_out << "# synthetic corpus: seed=" << options.seed << " count=" << options.count << "\n";

  std::array<std::ofstream, 3> crop_lists;
  CorpusManifest manifest;
  manifest.annotation_file = out_dir / "annotations.txt";
  for (std::size_t fi = 0; fi < kAllFeatures.size(); ++fi) {
    const std::string list_name = std::string(to_string(kAllFeatures[fi])) + "_crops.txt";
    manifest.crop_lists[fi] = out_dir / list_name;
    crop_lists[fi].open(manifest.crop_lists[fi], std::ios::binary);
    if (!crop_lists[fi]) throw IoError("cannot open " + list_name + " for writing");
  }

  const int W = options.image_width;
  const int H = options.image_height;
  const int face_w_max = std::min(240, W / 2);
  const int face_w_min = std::min(180, face_w_max);

  for (int i = 0; i < options.count; ++i) {
    // Background: gentle gradient plus per-pixel noise.
    GrayImage img(W, H);
    const double base = detail::rand_real(rng, 95.0, 140.0);
    const double gx = detail::rand_real(rng, -0.025, 0.025);
    const double gy = detail::rand_real(rng, -0.02, 0.02);
    const double noise = detail::rand_real(rng, 6.0, 14.0);
    for (int y = 0; y < H; ++y) {
      double* row = img.row(y);
      for (int x = 0; x < W; ++x) {
        row[x] = std::clamp(base + gx * x + gy * y + detail::rand_real(rng, -noise, noise),
                            0.0, 255.0);
      }
    }

    // Face placement leaves a border so margin-expanded eye regions never
    // clip at the image edge.
    const int wf = detail::rand_int(rng, face_w_min, face_w_max);
    const int hf = detail::round_half_away(wf * detail::rand_real(rng, 1.18, 1.34));
    const int border = 24;
    const int fx = detail::rand_int(rng, border, W - wf - border);
    const int fy = detail::rand_int(rng, border, H - hf - border);
    const FaceBox face = FaceBox::from_rect(Rect{fx, fy, wf, hf});

    const FacePartition part = partition(face, W, H, options.eye_margin_frac,
                                         options.mouth_width_frac);
    const PatchSpec patch0 = patch_schedule(PatchShape::rectangular, wf)[0];
    const int x_split = detail::round_half_away(fx + wf / 2.0);
    const int y_split = detail::round_half_away(fy + hf / 2.0);

    // Patterns are jittered toward the outer sides of their scan regions so
    // the three never overlap: eyes stay in the upper face half split at
    // x_split, the mouth below y_split.
    auto place = [&](int x_lo, int x_hi, int y_lo, int y_hi, int pw, int ph) {
      return Rect{detail::rand_int(rng, x_lo, x_hi), detail::rand_int(rng, y_lo, y_hi), pw, ph};
    };
    const Rect re_pat = place(part.right_eye.x, x_split - patch0.eye_w, part.right_eye.y,
                              y_split - patch0.eye_h, patch0.eye_w, patch0.eye_h);
    const Rect le_pat = place(x_split, part.left_eye.right() - patch0.eye_w, part.left_eye.y,
                              y_split - patch0.eye_h, patch0.eye_w, patch0.eye_h);
    const Rect m_pat = place(part.mouth.x, part.mouth.right() - patch0.mouth_w, y_split,
                             part.mouth.bottom() - patch0.mouth_h, patch0.mouth_w,
                             patch0.mouth_h);

    detail::draw_eye_pattern(img, re_pat);
    detail::draw_eye_pattern(img, le_pat);
    detail::draw_mouth_pattern(img, m_pat);

    char name[32];
    std::snprintf(name, sizeof(name), "face_%03d.pgm", i);
    write_pgm(img, out_dir / name);
    manifest.images.push_back(out_dir / name);

    const std::array<std::pair<Feature, Rect>, 3> planted{
        std::pair{Feature::left_eye, le_pat}, std::pair{Feature::right_eye, re_pat},
        std::pair{Feature::mouth, m_pat}};
    for (const auto& [feature, rect] : planted) {
      char crop_name[48];
      std::snprintf(crop_name, sizeof(crop_name), "crops/%s_%03d.pgm", to_string(feature), i);
      write_pgm(crop(img, rect), out_dir / crop_name);
      crop_lists[static_cast<std::size_t>(feature)] << crop_name << "\n";
    }

    const Rect gt_le = detail::centered_gt_box(le_pat, options.gt_frac);
    const Rect gt_re = detail::centered_gt_box(re_pat, options.gt_frac);
    const Rect gt_m = detail::centered_gt_box(m_pat, options.gt_frac);
    const FaceClass cls = kAllClasses[static_cast<std::size_t>(i % 3)];

    ann_out << name;
    for (const Point& p : face.source) ann_out << " " << p.x << " " << p.y;
    for (const Rect* r : {&gt_le, &gt_re, &gt_m}) {
      ann_out << " " << r->x << " " << r->y << " " << r->w << " " << r->h;
    }
    ann_out << " " << to_string(cls) << "\n";
  }

  if (!ann_out) throw IoError("failed writing annotation file");
  return manifest;
}

}  // namespace facefeat
