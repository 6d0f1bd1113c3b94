#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "facefeat/errors.hpp"
#include "facefeat/haar.hpp"
#include "facefeat/image.hpp"
#include "facefeat/resample.hpp"

namespace facefeat {

enum class Method { grayscale, haar };
enum class Feature { left_eye, right_eye, mouth };

inline const char* to_string(Method m) { return m == Method::grayscale ? "grayscale" : "haar"; }

inline Method parse_method(const std::string& s) {
  if (s == "grayscale") return Method::grayscale;
  if (s == "haar") return Method::haar;
  throw InputError("unknown method \"" + s + "\" (expected grayscale or haar)");
}

inline const char* to_string(Feature f) {
  switch (f) {
    case Feature::left_eye: return "left_eye";
    case Feature::right_eye: return "right_eye";
    default: return "mouth";
  }
}

inline Feature parse_feature(const std::string& s) {
  if (s == "left_eye") return Feature::left_eye;
  if (s == "right_eye") return Feature::right_eye;
  if (s == "mouth") return Feature::mouth;
  throw InputError("unknown feature \"" + s + "\" (expected left_eye, right_eye or mouth)");
}

constexpr std::array<Feature, 3> kAllFeatures{Feature::left_eye, Feature::right_eye, Feature::mouth};

// Averaged feature prototype: every sample crop is preprocessed for the
// method, resized to size x size and the stack averaged pixel by pixel.
struct Template {
  Method method = Method::grayscale;
  Feature feature = Feature::left_eye;
  int size = 10;
  std::vector<double> values;
  int sample_count = 0;

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * size + x]; }
  GrayImage as_image() const { return GrayImage(size, size, values); }
};

// For the haar method the transform runs on the raw crop *before* resizing,
// matching the preprocessing order used on full images.
inline Template build_template(const std::vector<GrayImage>& crops, Method method,
                               Feature feature, int size = 10) {
  if (crops.empty()) throw InputError("build_template needs at least one crop");
  if (size < 2) throw InputError("template size must be at least 2");

  Template t;
  t.method = method;
  t.feature = feature;
  t.size = size;
  t.sample_count = static_cast<int>(crops.size());
  const std::size_t n = static_cast<std::size_t>(size) * size;
  t.values.assign(n, 0.0);

  for (const GrayImage& c : crops) {
    GrayImage prepped = method == Method::haar ? haar_horizontal(c) : c;
    GrayImage resized = resize_bilinear(prepped, size, size);
    for (std::size_t i = 0; i < n; ++i) t.values[i] += resized.values()[i];
  }
  for (std::size_t i = 0; i < n; ++i) t.values[i] /= static_cast<double>(t.sample_count);
  return t;
}

// Text format, one template per file:
//   TMPL1
//   <method> <feature> <size> <sample_count>
//   <size> lines of <size> space-separated values
inline void save_template(const Template& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "TMPL1\n"
      << to_string(t.method) << " " << to_string(t.feature) << " " << t.size << " "
      << t.sample_count << "\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int y = 0; y < t.size; ++y) {
    for (int x = 0; x < t.size; ++x) {
      if (x) out << " ";
      out << t.at(x, y);
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

inline Template load_template(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string name = path.filename().string();
  std::string line;
  int line_no = 0;

  auto next_line = [&]() {
    if (!std::getline(in, line)) {
      throw FormatError(name + ": unexpected end of file after line " + std::to_string(line_no));
    }
    ++line_no;
  };

  next_line();
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "TMPL1") {
    throw FormatError(name + ": line 1: bad magic \"" + line + "\", expected \"TMPL1\"");
  }

  next_line();
  std::istringstream hdr(line);
  std::string method_s, feature_s;
  int size = 0, sample_count = 0;
  if (!(hdr >> method_s >> feature_s >> size >> sample_count)) {
    throw FormatError(name + ": line 2: malformed header line");
  }
  Template t;
  try {
    t.method = parse_method(method_s);
    t.feature = parse_feature(feature_s);
  } catch (const InputError& e) {
    throw FormatError(name + ": line 2: " + e.what());
  }
  if (size < 2) throw FormatError(name + ": line 2: size must be at least 2");
  if (sample_count < 1) throw FormatError(name + ": line 2: sample_count must be at least 1");
  t.size = size;
  t.sample_count = sample_count;
  t.values.reserve(static_cast<std::size_t>(size) * size);

  for (int y = 0; y < size; ++y) {
    next_line();
    std::istringstream row(line);
    for (int x = 0; x < size; ++x) {
      double v;
      if (!(row >> v)) {
        throw FormatError(name + ": line " + std::to_string(line_no) + ": expected " +
                          std::to_string(size) + " values, failed at column " +
                          std::to_string(x + 1));
      }
      t.values.push_back(v);
    }
    std::string extra;
    if (row >> extra) {
      throw FormatError(name + ": line " + std::to_string(line_no) + ": trailing token \"" +
                        extra + "\"");
    }
  }
  return t;
}

}  // namespace facefeat
