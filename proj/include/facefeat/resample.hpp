#pragma once

#include <cmath>
#include <vector>

#include "facefeat/errors.hpp"
#include "facefeat/image.hpp"

namespace facefeat {

namespace detail {

// One output coordinate on one axis: the two source taps and the
// interpolation weight between them. Taps are edge-clamped.
struct AxisTap {
  int lo;
  int hi;
  double t;
};

// Pixel-center mapping src = (dst + 0.5) * (src_n / dst_n) - 0.5.
inline std::vector<AxisTap> make_axis_taps(int src_n, int dst_n) {
  std::vector<AxisTap> taps(static_cast<std::size_t>(dst_n));
  const double ratio = static_cast<double>(src_n) / static_cast<double>(dst_n);
  for (int i = 0; i < dst_n; ++i) {
    double s = (i + 0.5) * ratio - 0.5;
    double fl = std::floor(s);
    int lo = static_cast<int>(fl);
    double t = s - fl;
    int hi = lo + 1;
    if (lo < 0) lo = 0;
    if (lo > src_n - 1) lo = src_n - 1;
    if (hi < 0) hi = 0;
    if (hi > src_n - 1) hi = src_n - 1;
    taps[static_cast<std::size_t>(i)] = AxisTap{lo, hi, t};
  }
  return taps;
}

// Linear interpolation clamped to the operand interval, so constants pass
// through bit-exactly and results never leave [min(a,b), max(a,b)].
inline double lerp(double a, double b, double t) {
  double v = a + t * (b - a);
  double lo = a < b ? a : b;
  double hi = a < b ? b : a;
  return v < lo ? lo : (v > hi ? hi : v);
}

// Resamples the window whose top-left corner is (ox, oy) directly from the
// source image; equivalent to crop-then-resize without the copy. The taps
// carry the window-local coordinates.
inline void resample_window(const GrayImage& img, int ox, int oy,
                            const std::vector<AxisTap>& xtaps,
                            const std::vector<AxisTap>& ytaps, double* out) {
  const std::size_t out_w = xtaps.size();
  for (std::size_t j = 0; j < ytaps.size(); ++j) {
    const AxisTap& ty = ytaps[j];
    const double* r0 = img.row(oy + ty.lo) + ox;
    const double* r1 = img.row(oy + ty.hi) + ox;
    double* dst = out + j * out_w;
    for (std::size_t i = 0; i < out_w; ++i) {
      const AxisTap& tx = xtaps[i];
      double top = lerp(r0[tx.lo], r0[tx.hi], tx.t);
      double bot = lerp(r1[tx.lo], r1[tx.hi], tx.t);
      dst[i] = lerp(top, bot, ty.t);
    }
  }
}

}  // namespace detail

inline GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) {
    throw SizeError("resize target must be at least 1x1");
  }
  GrayImage out(out_w, out_h);
  const auto xtaps = detail::make_axis_taps(img.width(), out_w);
  const auto ytaps = detail::make_axis_taps(img.height(), out_h);
  detail::resample_window(img, 0, 0, xtaps, ytaps, out.values().data());
  return out;
}

}  // namespace facefeat
