#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "ocgs/config.hpp"
#include "ocgs/image.hpp"
#include "ocgs/scene_model.hpp"

namespace ocgs {

struct RenderOptions {
  RenderSettings settings;
  Eigen::Vector3d background = Eigen::Vector3d::Zero();
  int sh_degree = -1;       // active SH degree; -1 uses splats.sh_degree
  bool distortion = false;  // also fill RenderOutput::distortion
};

/// Per-view buffers. Depth values are ray parameters along camera rays with unit z,
/// i.e. camera-space z of the hit point.
struct RenderOutput {
  Image color;           // h × w × 3
  Image alpha;           // h × w, sum of blend weights
  Image depth;           // h × w, depth of the contributor where alpha first reaches 0.5, else 0
  Image expected_depth;  // h × w, sum(w t) / alpha, 0 where alpha = 0
  Image normal;          // h × w × 3, sum(w n), camera space, normals facing the camera
  Image distortion;      // h × w, sum_{i<j} w_i w_j |z_i - z_j| in mapped depth (when requested)
  std::vector<std::uint8_t> contributed;  // per splat: blend weight > 0 on some pixel
  std::vector<std::uint8_t> in_frustum;   // per splat: passed culling and was binned
  std::vector<double> radius_px;          // per splat: half-extent of the screen footprint
};

/// Splats sorted into square screen tiles. Entries for tile t live in
/// tile_splats[tile_offsets[t] .. tile_offsets[t+1]) sorted by (center depth, index).
struct TileBinning {
  int tile_size = 16;
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::uint32_t> tile_offsets;
  std::vector<std::uint32_t> tile_splats;
  std::vector<std::uint8_t> in_frustum;
  std::vector<Eigen::Vector4i> pixel_rect;  // [x0, y0, x1, y1) pixels the footprint may touch
  std::vector<double> radius_px;
};

TileBinning bin_splats(const SplatSet& splats, const CameraView& camera, const RenderSettings& settings = {});

RenderOutput render_forward(const SplatSet& splats, const CameraView& camera, const RenderOptions& options = {});

/// Upstream gradients of a scalar loss w.r.t. render buffers. Empty images count as zero.
struct PixelAdjoints {
  Image color;
  Image alpha;
  Image depth;
  Image expected_depth;
  Image normal;
  Image distortion;
};

/// Gradients in raw parameter space, same layout as SplatSet. `screen` is the gradient
/// w.r.t. the projected center in normalized device units (used by densification).
struct SplatGradients {
  std::vector<Eigen::Vector3d> position;
  std::vector<Eigen::Vector4d> rotation;
  std::vector<Eigen::Vector2d> log_scale;
  std::vector<double> opacity_logit;
  std::vector<double> sh;
  std::vector<Eigen::Vector2d> screen;

  void resize(std::size_t m, int coeffs);
};

SplatGradients render_backward(const SplatSet& splats, const CameraView& camera, const RenderOptions& options,
                               const RenderOutput& output, const PixelAdjoints& adjoints);

/// Depth mapping used by the distortion term and its derivative.
double distortion_depth(double t, const RenderSettings& s);
double distortion_depth_derivative(double t, const RenderSettings& s);

}  // namespace ocgs
