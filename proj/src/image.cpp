#include "ocgs/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

#include "ocgs/error.hpp"

namespace ocgs {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error(ErrorKind::ingest, "cannot open image " + path.string());

  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
    throw Error(ErrorKind::ingest, "not a PNG file: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::ingest, "libpng initialization failed");
  }
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::ingest, "corrupt PNG: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (bit_depth == 16) png_set_swap(png);  // host little-endian byte order
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int depth = png_get_bit_depth(png, info);
  const int src_channels = png_get_channels(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);

  buffer.resize(row_bytes * height);
  rows.resize(height);
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + row_bytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const int out_channels = src_channels >= 3 ? 3 : 1;
  Image img(width, height, out_channels);
  const double scale = depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
  for (int y = 0; y < height; ++y) {
    const png_byte* row = rows[y];
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < out_channels; ++c) {
        const std::size_t i = static_cast<std::size_t>(x) * src_channels + c;
        double v;
        if (depth == 16) {
          std::uint16_t s;
          std::memcpy(&s, row + 2 * i, 2);
          v = s;
        } else {
          v = row[i];
        }
        img.at(x, y, c) = v * scale;
      }
    }
  }
  return img;
}

void write_png(const std::filesystem::path& path, const Image& image, int bit_depth) {
  if (image.channels != 1 && image.channels != 3)
    throw Error(ErrorKind::contract, "write_png expects 1 or 3 channels");
  if (bit_depth != 8 && bit_depth != 16) throw Error(ErrorKind::contract, "bit depth must be 8 or 16");
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(ErrorKind::format, "cannot write " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::format, "libpng initialization failed");
  }
  const int bytes = bit_depth / 8;
  const std::size_t row_bytes = static_cast<std::size_t>(image.width) * image.channels * bytes;
  std::vector<png_byte> buffer(row_bytes * image.height);
  const double max_v = bit_depth == 16 ? 65535.0 : 255.0;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        const double v = std::clamp(image.at(x, y, c), 0.0, 1.0);
        const auto q = static_cast<std::uint32_t>(std::lround(v * max_v));
        png_byte* dst = buffer.data() + y * row_bytes + (static_cast<std::size_t>(x) * image.channels + c) * bytes;
        if (bytes == 2) {
          dst[0] = static_cast<png_byte>(q >> 8);  // PNG is big-endian
          dst[1] = static_cast<png_byte>(q & 0xff);
        } else {
          dst[0] = static_cast<png_byte>(q);
        }
      }
    }
  }
  std::vector<png_bytep> rows(image.height);
  for (int y = 0; y < image.height; ++y) rows[y] = buffer.data() + y * row_bytes;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::format, "failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width, image.height, bit_depth,
               image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image to_gray(const Image& image) {
  if (image.channels == 1) return image;
  Image out(image.width, image.height, 1);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      out.at(x, y) = 0.299 * image.at(x, y, 0) + 0.587 * image.at(x, y, 1) + 0.114 * image.at(x, y, 2);
  return out;
}

}  // namespace ocgs
