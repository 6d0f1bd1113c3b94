#pragma once

#include <string>
#include <vector>

#include "facefeat/errors.hpp"
#include "facefeat/image.hpp"

namespace facefeat {

// Multi-resolution stack for coarse-to-fine matching. Level 0 is the full
// image; each further level halves both dimensions (floor) by 2x2 block
// averaging, stopping before a level whose smaller dimension would drop
// below the configured floor.
struct Pyramid {
  std::vector<GrayImage> levels;

  int level_count() const { return static_cast<int>(levels.size()); }
  const GrayImage& level(int i) const { return levels[static_cast<std::size_t>(i)]; }
};

namespace detail {

inline GrayImage halve_block_mean(const GrayImage& src) {
  const int w = src.width() / 2;
  const int h = src.height() / 2;
  GrayImage out(w, h);
  // Floor halving keeps 2x+1 < src width, so blocks never cross the edge;
  // a trailing odd row/column does not contribute.
  for (int y = 0; y < h; ++y) {
    const double* r0 = src.row(2 * y);
    const double* r1 = src.row(2 * y + 1);
    double* dst = out.row(y);
    for (int x = 0; x < w; ++x) {
      dst[x] = (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]) / 4.0;
    }
  }
  return out;
}

}  // namespace detail

inline Pyramid build_pyramid(const GrayImage& img, int min_dim) {
  if (min_dim < 2) {
    throw InputError("pyramid min_dim must be at least 2, got " + std::to_string(min_dim));
  }
  if (img.width() < min_dim || img.height() < min_dim) {
    throw SizeError("image " + std::to_string(img.width()) + "x" +
                    std::to_string(img.height()) + " smaller than pyramid min_dim " +
                    std::to_string(min_dim));
  }
  Pyramid pyr;
  pyr.levels.push_back(img);
  while (true) {
    const GrayImage& top = pyr.levels.back();
    int nw = top.width() / 2;
    int nh = top.height() / 2;
    if (nw < min_dim || nh < min_dim) break;
    pyr.levels.push_back(detail::halve_block_mean(top));
  }
  return pyr;
}

}  // namespace facefeat
