#pragma once

#include "strokefield/types.hpp"

#include <stdexcept>
#include <string>

namespace strokefield::io {

struct FileNotFoundError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PngFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedPngError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 8-bit RGB or RGBA (alpha dropped); channel byte c maps to c/255.
Image<double> load_png(const std::string& path);

// 8-bit RGB; each channel stored as round(v * 255) after clamping to [0, 1].
void save_png(const Image<double>& image, const std::string& path);

}  // namespace strokefield::io
