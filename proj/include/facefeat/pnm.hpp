#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "facefeat/errors.hpp"
#include "facefeat/image.hpp"

// Binary netpbm codecs: P5 (PGM) and P6 (PPM), maxval 255 only.
// Header comments ('#' to end of line) are accepted; exactly one whitespace
// byte separates the maxval from the payload.

namespace facefeat {

namespace detail {

struct PnmReader {
  std::string data;
  std::size_t pos = 0;
  std::string name;

  void skip_space_and_comments() {
    while (pos < data.size()) {
      char c = data[pos];
      if (c == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
  }

  int read_uint(const char* field) {
    skip_space_and_comments();
    std::size_t start = pos;
    while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) ++pos;
    if (pos == start) {
      throw FormatError(name + ": malformed header, invalid " + std::string(field) + " field");
    }
    long v = 0;
    for (std::size_t i = start; i < pos; ++i) {
      v = v * 10 + (data[i] - '0');
      if (v > 1'000'000'000L) {
        throw FormatError(name + ": " + std::string(field) + " field out of range");
      }
    }
    return static_cast<int>(v);
  }
};

inline PnmReader open_pnm(const std::filesystem::path& path, const char* magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  PnmReader r;
  r.name = path.filename().string();
  r.data.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  if (r.data.size() < 2 || r.data.compare(0, 2, magic) != 0) {
    throw FormatError(r.name + ": malformed header, expected magic \"" + magic + "\"");
  }
  r.pos = 2;
  return r;
}

// Parses dims + maxval and leaves pos at the first payload byte.
inline void read_pnm_header(PnmReader& r, int& w, int& h) {
  w = r.read_uint("width");
  h = r.read_uint("height");
  if (w < 1 || h < 1) throw FormatError(r.name + ": width/height must be positive");
  int maxval = r.read_uint("maxval");
  if (maxval != 255) {
    throw FormatError(r.name + ": unsupported maxval " + std::to_string(maxval) +
                      " (only 255 is supported)");
  }
  if (r.pos >= r.data.size() ||
      !std::isspace(static_cast<unsigned char>(r.data[r.pos]))) {
    throw FormatError(r.name + ": malformed header, expected whitespace after maxval");
  }
  ++r.pos;
}

}  // namespace detail

inline GrayImage read_pgm(const std::filesystem::path& path) {
  detail::PnmReader r = detail::open_pnm(path, "P5");
  int w = 0, h = 0;
  detail::read_pnm_header(r, w, h);
  const std::size_t need = static_cast<std::size_t>(w) * h;
  if (r.data.size() - r.pos < need) {
    throw FormatError(r.name + ": truncated payload, expected " + std::to_string(need) +
                      " bytes, got " + std::to_string(r.data.size() - r.pos));
  }
  GrayImage img(w, h);
  double* v = img.values().data();
  for (std::size_t i = 0; i < need; ++i) {
    v[i] = static_cast<double>(static_cast<std::uint8_t>(r.data[r.pos + i]));
  }
  return img;
}

inline RgbImage read_ppm(const std::filesystem::path& path) {
  detail::PnmReader r = detail::open_pnm(path, "P6");
  int w = 0, h = 0;
  detail::read_pnm_header(r, w, h);
  const std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (r.data.size() - r.pos < need) {
    throw FormatError(r.name + ": truncated payload, expected " + std::to_string(need) +
                      " bytes, got " + std::to_string(r.data.size() - r.pos));
  }
  RgbImage img(w, h);
  std::uint8_t* p = img.pixels().data();
  for (std::size_t i = 0; i < need; ++i) {
    p[i] = static_cast<std::uint8_t>(r.data[r.pos + i]);
  }
  return img;
}

// Values are rounded to nearest and clamped to [0, 255] on write, so
// write/read round-trips exactly for integer-valued images in range.
inline void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  std::vector<std::uint8_t> bytes(img.values().size());
  const double* v = img.values().data();
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    long q = std::lround(v[i]);
    bytes[i] = static_cast<std::uint8_t>(q < 0 ? 0 : (q > 255 ? 255 : q));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

// Loads either P5 or P6 (converting to luma) based on the file's magic.
inline GrayImage read_gray_any(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  in.close();
  if (magic[0] == 'P' && magic[1] == '5') return read_pgm(path);
  if (magic[0] == 'P' && magic[1] == '6') return to_grayscale(read_ppm(path));
  throw FormatError(path.filename().string() + ": malformed header, expected magic \"P5\" or \"P6\"");
}

}  // namespace facefeat
