#include "strokefield/io/png.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <vector>

namespace strokefield::io {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_handler(png_structp png, png_const_charp msg) {
  // Jump back to the setjmp point; message retrieval happens there.
  (void)msg;
  std::longjmp(png_jmpbuf(png), 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

}  // namespace

Image<double> load_png(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw FileNotFoundError("cannot open " + path);

  png_byte signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0)
    throw PngFormatError(path + ": not a PNG file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler,
                                           png_warning_handler);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw PngFormatError(path + ": failed to initialize PNG reader");
  }

  std::vector<png_byte> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, color_type = 0;

  // Two setjmp regions so the vectors are never mutated while a longjmp
  // target is armed (their state would be indeterminate after the jump).
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw PngFormatError(path + ": malformed PNG data");
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);

  if (bit_depth != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw UnsupportedPngError(path + ": only 8-bit PNGs are supported, got bit depth " +
                              std::to_string(bit_depth));
  }
  if (color_type != PNG_COLOR_TYPE_RGB && color_type != PNG_COLOR_TYPE_RGB_ALPHA) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw UnsupportedPngError(path + ": only RGB and RGBA PNGs are supported");
  }
  if (color_type == PNG_COLOR_TYPE_RGB_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  pixels.resize(static_cast<std::size_t>(height) * width * 3);
  rows.resize(height);
  for (png_uint_32 r = 0; r < height; ++r)
    rows[r] = pixels.data() + static_cast<std::size_t>(r) * width * 3;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw PngFormatError(path + ": malformed PNG data");
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image<double> image(static_cast<Index>(height), static_cast<Index>(width));
  for (Index i = 0; i < image.rows(); ++i)
    for (Index j = 0; j < image.cols(); ++j) {
      const png_byte* px = pixels.data() + (static_cast<std::size_t>(i) * width + static_cast<std::size_t>(j)) * 3;
      for (int c = 0; c < 3; ++c)
        image.ch[static_cast<std::size_t>(c)](i, j) = px[c] / 255.0;
    }
  return image;
}

void save_png(const Image<double>& image, const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw FileNotFoundError("cannot open " + path + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler,
                                            png_warning_handler);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw PngFormatError(path + ": failed to initialize PNG writer");
  }

  const auto height = static_cast<png_uint_32>(image.rows());
  const auto width = static_cast<png_uint_32>(image.cols());
  std::vector<png_byte> pixels(static_cast<std::size_t>(height) * width * 3);
  for (Index i = 0; i < image.rows(); ++i)
    for (Index j = 0; j < image.cols(); ++j) {
      png_byte* px = pixels.data() + (static_cast<std::size_t>(i) * width + static_cast<std::size_t>(j)) * 3;
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(image.ch[static_cast<std::size_t>(c)](i, j), 0.0, 1.0);
        px[c] = static_cast<png_byte>(std::lround(v * 255.0));
      }
    }

  std::vector<png_bytep> rows(height);
  for (png_uint_32 r = 0; r < height; ++r)
    rows[r] = pixels.data() + static_cast<std::size_t>(r) * width * 3;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw PngFormatError(path + ": PNG write failed");
  }

  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace strokefield::io
