#pragma once

#include <string>
#include <vector>

#include "facefeat/errors.hpp"
#include "facefeat/image.hpp"

namespace facefeat {

// Undecimated single-level horizontal Haar sub-band: rows are low-passed
// with [1 1]/2, then columns high-passed with [1 -1]/2, both edge-replicated.
// Output keeps the input size and sign, emphasizing horizontal edges (eye
// and mouth bars) while flattening vertical detail.
inline GrayImage haar_horizontal(const GrayImage& img) {
  const int w = img.width();
  const int h = img.height();
  if (w < 2 || h < 2) {
    throw SizeError("haar_horizontal needs at least 2x2, got " +
                    std::to_string(w) + "x" + std::to_string(h));
  }

  GrayImage low(w, h);
  for (int y = 0; y < h; ++y) {
    const double* src = img.row(y);
    double* dst = low.row(y);
    for (int x = 0; x < w - 1; ++x) dst[x] = (src[x] + src[x + 1]) / 2.0;
    dst[w - 1] = src[w - 1];  // (f + f) / 2
  }

  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    const double* a0 = low.row(y);
    const double* a1 = low.row(y + 1 < h ? y + 1 : h - 1);
    double* dst = out.row(y);
    for (int x = 0; x < w; ++x) dst[x] = (a0[x] - a1[x]) / 2.0;
  }
  return out;
}

}  // namespace facefeat
