#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

#include "ocgs/scene_model.hpp"

namespace testing_helpers {

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() / ("ocgs_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

inline ocgs::SplatSet random_splats(std::size_t n, std::uint64_t seed, int degree = 1, double spread = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  ocgs::SplatSet s;
  s.sh_degree = degree;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> sh(static_cast<std::size_t>(s.coeffs()) * 3);
    for (auto& c : sh) c = 0.4 * U(rng);
    s.push_back({spread * U(rng), spread * U(rng), spread * U(rng)}, {U(rng), U(rng), U(rng), U(rng) + 0.1},
                {std::log(0.2) + 0.5 * U(rng), std::log(0.2) + 0.5 * U(rng)}, 2.0 * U(rng), sh,
                static_cast<std::uint32_t>(i));
  }
  return s;
}

/// Single splat facing the camera (normal along -z toward a camera on the -z side).
inline void add_plain(ocgs::SplatSet& s, const Eigen::Vector3d& p, double scale, double opacity,
                      const Eigen::Vector3d& rgb, std::uint32_t tag = 0) {
  std::vector<double> sh(static_cast<std::size_t>(s.coeffs()) * 3, 0.0);
  for (int c = 0; c < 3; ++c) sh[c] = (rgb[c] - 0.5) / 0.28209479177387814;
  s.push_back(p, {1, 0, 0, 0}, Eigen::Vector2d::Constant(std::log(scale)), ocgs::logit(opacity), sh, tag);
}

inline ocgs::CameraView front_camera(int w = 32, int h = 32, double fov = 1.0) {
  return ocgs::CameraView::look_at({0, 0, -3}, {0, 0, 0}, {0, -1, 0}, w, h, fov);
}

}  // namespace testing_helpers
