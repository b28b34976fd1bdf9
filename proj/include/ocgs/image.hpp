#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace ocgs {

/// Row-major interleaved image of doubles (height × width × channels).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool empty() const { return data.empty(); }
  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  double& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  double at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }
};

/// Reads 8- or 16-bit PNGs (gray, gray+alpha, RGB, RGBA, palette); values scaled to [0,1].
/// Alpha channels are dropped.
Image read_png(const std::filesystem::path& path);

/// Writes a 1- or 3-channel image, clamping to [0,1]. `bit_depth` is 8 or 16.
void write_png(const std::filesystem::path& path, const Image& image, int bit_depth = 8);

/// Gray conversion (Rec. 601 weights) for 3-channel images; 1-channel images pass through.
Image to_gray(const Image& image);

}  // namespace ocgs
