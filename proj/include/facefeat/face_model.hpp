#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "facefeat/errors.hpp"
#include "facefeat/image.hpp"

namespace facefeat {

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

// Manually annotated face region: the four clicked corner points plus their
// axis-aligned bounding box (inclusive of the extreme points).
struct FaceBox {
  Rect rect;
  std::array<Point, 4> source{};

  static FaceBox from_points(const std::array<Point, 4>& pts) {
    int min_x = pts[0].x, max_x = pts[0].x;
    int min_y = pts[0].y, max_y = pts[0].y;
    for (const Point& p : pts) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
    return FaceBox{Rect{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1}, pts};
  }

  static FaceBox from_rect(const Rect& r) {
    std::array<Point, 4> pts{Point{r.x, r.y}, Point{r.right() - 1, r.y},
                             Point{r.right() - 1, r.bottom() - 1}, Point{r.x, r.bottom() - 1}};
    return FaceBox{r, pts};
  }
};

// Scan regions for the three features, in image coordinates. The right eye
// region sits on the image-left side of the face (the subject's right).
struct FacePartition {
  Rect right_eye;
  Rect left_eye;
  Rect mouth;
};

namespace detail {

inline int round_half_away(double v) { return static_cast<int>(std::lround(v)); }

// Keeps the rect size and shifts it inside the image; shrinks only when the
// rect is larger than the image itself.
inline Rect clamp_rect_shift(Rect r, int image_w, int image_h) {
  if (r.w > image_w) {
    r.x = 0;
    r.w = image_w;
  } else {
    r.x = std::clamp(r.x, 0, image_w - r.w);
  }
  if (r.h > image_h) {
    r.y = 0;
    r.h = image_h;
  } else {
    r.y = std::clamp(r.y, 0, image_h - r.h);
  }
  return r;
}

}  // namespace detail

// Splits the face box into the three scan regions: eyes tile the upper half
// left/right, the mouth takes the lower half. Eye regions are then grown by
// eye_margin_frac of their own size on every side (eyes can sit slightly
// outside their half, especially on slanted poses), and the mouth region is
// narrowed to mouth_width_frac of the face width, centered.
inline FacePartition partition(const FaceBox& face, int image_w, int image_h,
                               double eye_margin_frac = 0.10,
                               double mouth_width_frac = 0.60) {
  if (eye_margin_frac < 0.0 || eye_margin_frac > 0.5) {
    throw InputError("eye_margin_frac must be in [0, 0.5]");
  }
  if (mouth_width_frac <= 0.0 || mouth_width_frac > 1.0) {
    throw InputError("mouth_width_frac must be in (0, 1]");
  }
  const Rect f = face.rect;
  if (f.w < 2 || f.h < 2) {
    throw InputError("face box must be at least 2x2, got " + to_string(f));
  }
  if (!Rect{0, 0, image_w, image_h}.contains(f)) {
    throw BoundsError("face box " + to_string(f) + " outside image " +
                      std::to_string(image_w) + "x" + std::to_string(image_h));
  }

  // Rounding the split point (rather than each half width) keeps the three
  // regions an exact tiling of the face box at zero margin.
  const int x_split = detail::round_half_away(f.x + f.w / 2.0);
  const int y_split = detail::round_half_away(f.y + f.h / 2.0);

  const Rect right_base{f.x, f.y, x_split - f.x, y_split - f.y};
  const Rect left_base{x_split, f.y, f.right() - x_split, y_split - f.y};

  auto expand_eye = [&](const Rect& base) {
    int mx = detail::round_half_away(eye_margin_frac * base.w);
    int my = detail::round_half_away(eye_margin_frac * base.h);
    Rect r{base.x - mx, base.y - my, base.w + 2 * mx, base.h + 2 * my};
    return detail::clamp_rect_shift(r, image_w, image_h);
  };

  const double mouth_w_real = mouth_width_frac * f.w;
  Rect mouth{detail::round_half_away(f.x + (f.w - mouth_w_real) / 2.0), y_split,
             detail::round_half_away(mouth_w_real), f.bottom() - y_split};
  mouth = detail::clamp_rect_shift(mouth, image_w, image_h);

  return FacePartition{expand_eye(right_base), expand_eye(left_base), mouth};
}

enum class PatchShape { rectangular, square };

inline const char* to_string(PatchShape s) {
  return s == PatchShape::rectangular ? "rectangular" : "square";
}

inline PatchShape parse_patch_shape(const std::string& s) {
  if (s == "rectangular") return PatchShape::rectangular;
  if (s == "square") return PatchShape::square;
  throw InputError("unknown patch shape \"" + s + "\" (expected rectangular or square)");
}

// Scanning patch dimensions for one entry of a resize schedule.
struct PatchSpec {
  PatchShape shape = PatchShape::rectangular;
  int reduction_step = 0;
  int eye_w = 0;
  int eye_h = 0;
  int mouth_w = 0;
  int mouth_h = 0;

  int width_for(bool mouth) const { return mouth ? mouth_w : eye_w; }
  int height_for(bool mouth) const { return mouth ? mouth_h : eye_h; }
  friend bool operator==(const PatchSpec&, const PatchSpec&) = default;
};

// Patch sizes per reduction step, derived from the face width.
//
// Rectangular (4 steps): the eye patch starts at half the face width, the
// mouth patch at 0.6 of it; widths then shrink to 90/80/70% of the original
// and every height is 0.8 of that step's own width.
//
// Square (3 steps): all dims 0.50, then 0.45, then eyes 0.45 / mouth 0.55 of
// the face width. The final step intentionally grows the mouth patch back.
//
// All dimensions round to nearest (ties away from zero), minimum 1.
inline std::vector<PatchSpec> patch_schedule(PatchShape shape, int face_width) {
  if (face_width < 20) {
    throw InputError("face width must be at least 20, got " + std::to_string(face_width));
  }
  auto dim = [](double v) { return std::max(1, detail::round_half_away(v)); };

  std::vector<PatchSpec> steps;
  if (shape == PatchShape::rectangular) {
    const double eye_w0 = 0.5 * face_width;
    const double mouth_w0 = 0.6 * face_width;
    const double factors[] = {1.0, 0.9, 0.8, 0.7};
    for (int s = 0; s < 4; ++s) {
      PatchSpec p;
      p.shape = shape;
      p.reduction_step = s;
      p.eye_w = dim(factors[s] * eye_w0);
      p.eye_h = dim(0.8 * p.eye_w);
      p.mouth_w = dim(factors[s] * mouth_w0);
      p.mouth_h = dim(0.8 * p.mouth_w);
      steps.push_back(p);
    }
  } else {
    const double eye_frac[] = {0.50, 0.45, 0.45};
    const double mouth_frac[] = {0.50, 0.45, 0.55};
    for (int s = 0; s < 3; ++s) {
      PatchSpec p;
      p.shape = shape;
      p.reduction_step = s;
      p.eye_w = p.eye_h = dim(eye_frac[s] * face_width);
      p.mouth_w = p.mouth_h = dim(mouth_frac[s] * face_width);
      steps.push_back(p);
    }
  }
  return steps;
}

}  // namespace facefeat
