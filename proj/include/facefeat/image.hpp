#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "facefeat/errors.hpp"

namespace facefeat {

// Axis-aligned pixel rectangle. Origin is the image's top-left corner,
// x grows rightward and y downward. Width/height are in pixels.
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int right() const { return x + w; }
  int bottom() const { return y + h; }
  long long area() const { return static_cast<long long>(w) * h; }

  bool contains(const Rect& r) const {
    return r.x >= x && r.y >= y && r.right() <= right() && r.bottom() <= bottom();
  }
  bool overlaps(const Rect& r) const {
    return r.x < right() && x < r.right() && r.y < bottom() && y < r.bottom();
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

inline std::string to_string(const Rect& r) {
  return "(" + std::to_string(r.x) + "," + std::to_string(r.y) + " " +
         std::to_string(r.w) + "x" + std::to_string(r.h) + ")";
}

// Real-valued raster, the pixel container shared by raw grayscale,
// Haar-transformed and pyramid images. Raw grayscale lies in [0, 255];
// transform output may be negative.
class GrayImage {
 public:
  GrayImage() : width_(1), height_(1), values_(1, 0.0) {}

  GrayImage(int width, int height, double value = 0.0)
      : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw SizeError("image dimensions must be at least 1x1, got " +
                      std::to_string(width) + "x" + std::to_string(height));
    }
    values_.assign(static_cast<std::size_t>(width) * height, value);
  }

  GrayImage(int width, int height, std::vector<double> values)
      : width_(width), height_(height), values_(std::move(values)) {
    if (width < 1 || height < 1) {
      throw SizeError("image dimensions must be at least 1x1");
    }
    if (values_.size() != static_cast<std::size_t>(width) * height) {
      throw SizeError("value count does not match image dimensions");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  Rect bounds() const { return Rect{0, 0, width_, height_}; }

  double at(int x, int y) const { return values_[index(x, y)]; }
  double& at(int x, int y) { return values_[index(x, y)]; }
  const double* row(int y) const { return values_.data() + static_cast<std::size_t>(y) * width_; }
  double* row(int y) { return values_.data() + static_cast<std::size_t>(y) * width_; }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_;
  int height_;
  std::vector<double> values_;
};

// 8-bit RGB raster, row-major interleaved channels.
class RgbImage {
 public:
  RgbImage() : width_(1), height_(1), pixels_(3, 0) {}

  RgbImage(int width, int height, std::uint8_t value = 0)
      : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw SizeError("image dimensions must be at least 1x1, got " +
                      std::to_string(width) + "x" + std::to_string(height));
    }
    pixels_.assign(static_cast<std::size_t>(width) * height * 3, value);
  }

  int width() const { return width_; }
  int height() const { return height_; }

  std::uint8_t channel(int x, int y, int c) const { return pixels_[index(x, y) + c]; }
  void set_pixel(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    std::size_t i = index(x, y);
    pixels_[i] = r;
    pixels_[i + 1] = g;
    pixels_[i + 2] = b;
  }

  const std::vector<std::uint8_t>& pixels() const { return pixels_; }
  std::vector<std::uint8_t>& pixels() { return pixels_; }

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

// ITU-R BT.601 luma. Integer-scaled so that equal channels convert exactly:
// (299 + 587 + 114) = 1000.
inline GrayImage to_grayscale(const RgbImage& img) {
  GrayImage out(img.width(), img.height());
  const std::uint8_t* p = img.pixels().data();
  double* v = out.values().data();
  const std::size_t n = out.values().size();
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = (299.0 * p[3 * i] + 587.0 * p[3 * i + 1] + 114.0 * p[3 * i + 2]) / 1000.0;
  }
  return out;
}

inline GrayImage crop(const GrayImage& img, const Rect& r) {
  if (r.w < 1 || r.h < 1) {
    throw SizeError("crop rect must be at least 1x1, got " + to_string(r));
  }
  if (!img.bounds().contains(r)) {
    throw BoundsError("crop rect " + to_string(r) + " outside image " +
                      std::to_string(img.width()) + "x" + std::to_string(img.height()));
  }
  GrayImage out(r.w, r.h);
  for (int y = 0; y < r.h; ++y) {
    const double* src = img.row(r.y + y) + r.x;
    double* dst = out.row(y);
    for (int x = 0; x < r.w; ++x) dst[x] = src[x];
  }
  return out;
}

}  // namespace facefeat
