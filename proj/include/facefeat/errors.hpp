#pragma once

#include <stdexcept>

namespace facefeat {

// Base class for every error this library raises.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormatError : Error { using Error::Error; };  // malformed file content
struct BoundsError : Error { using Error::Error; };  // rect falls outside an image
struct SizeError : Error { using Error::Error; };    // dimension constraint violated
struct InputError : Error { using Error::Error; };   // bad argument or empty input
struct IoError : Error { using Error::Error; };      // filesystem failure

}  // namespace facefeat
