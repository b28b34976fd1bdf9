#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ocgs/image.hpp"

namespace ocgs {

inline constexpr int kMaxShDegree = 3;

constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// The learnable 2D Gaussian disc population in structure-of-arrays layout.
///
/// Parameters live in unconstrained space: raw quaternions (w, x, y, z) that are
/// normalized on decode, log-scales along the two tangent axes, opacity logits and
/// spherical-harmonic coefficients laid out as [splat][coeff][channel].
/// The trailing arrays are training statistics maintained by density control;
/// `tag` is a free provenance label that follows a splat through clone and split.
struct SplatSet {
  int sh_degree = kMaxShDegree;

  std::vector<Eigen::Vector3d> position;
  std::vector<Eigen::Vector4d> rotation;
  std::vector<Eigen::Vector2d> log_scale;
  std::vector<double> opacity_logit;
  std::vector<double> sh;

  std::vector<double> grad_accum;
  std::vector<std::uint32_t> grad_count;
  std::vector<std::uint8_t> seen_since_prune;
  std::vector<double> max_radius;
  std::vector<std::uint32_t> tag;

  std::size_t size() const { return position.size(); }
  bool empty() const { return position.empty(); }
  int coeffs() const { return sh_coeff_count(sh_degree); }

  std::span<double> sh_of(std::size_t k) {
    return {sh.data() + k * coeffs() * 3, static_cast<std::size_t>(coeffs()) * 3};
  }
  std::span<const double> sh_of(std::size_t k) const {
    return {sh.data() + k * coeffs() * 3, static_cast<std::size_t>(coeffs()) * 3};
  }

  /// Appends a splat with zeroed statistics; `sh_coeffs` must hold coeffs()*3 values.
  void push_back(const Eigen::Vector3d& pos, const Eigen::Vector4d& rot, const Eigen::Vector2d& log_s,
                 double logit, std::span<const double> sh_coeffs, std::uint32_t provenance = 0);

  /// Appends a bit-exact copy of splat `k` (statistics included).
  void push_copy(std::size_t k);

  /// Stable compaction: keeps splat k iff keep[k] != 0.
  void keep(std::span<const std::uint8_t> keep_mask);

  void reset_statistics();

  /// Throws a contract error unless every per-splat array has length size().
  void check_consistent() const;
};

/// Activated geometry of one splat.
struct DecodedSplat {
  Eigen::Vector3d position;
  Eigen::Vector3d tangent_u;
  Eigen::Vector3d tangent_v;
  Eigen::Vector3d normal;
  Eigen::Vector2d scale;
  double opacity = 0.0;
};

double sigmoid(double x);
double logit(double p);

/// Rotation matrix of a unit quaternion (w, x, y, z); columns are t_u, t_v, normal.
Eigen::Matrix3d rotation_from_unit_quaternion(const Eigen::Vector4d& q);

/// Throws ErrorKind::parameter_corruption if any raw parameter of splat k is non-finite
/// or its quaternion is zero.
DecodedSplat decode_splat(const SplatSet& splats, std::size_t k);
std::vector<DecodedSplat> decode_params(const SplatSet& splats);

/// Pinhole camera. `pose` maps world to camera coordinates (x right, y down, z forward).
/// Pixel (i, j) covers [i, i+1) × [j, j+1); its center ray passes through (i+0.5, j+0.5).
struct CameraView {
  Eigen::Matrix4d pose = Eigen::Matrix4d::Identity();
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  Eigen::Matrix3d rotation() const { return pose.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return pose.topRightCorner<3, 1>(); }
  Eigen::Vector3d center() const { return -rotation().transpose() * translation(); }

  /// Camera-space direction (z = 1) of the ray through the center of pixel (x, y).
  Eigen::Vector3d pixel_ray(int x, int y) const {
    return {(x + 0.5 - cx) / fx, (y + 0.5 - cy) / fy, 1.0};
  }

  /// Throws a contract error unless the pose is a proper rigid transform and fx, fy > 0.
  void validate() const;

  /// Camera at `eye` looking at `target`; `up` is the approximate world up direction.
  static CameraView look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                            const Eigen::Vector3d& up, int width, int height, double fov_x_radians);
};

struct TrainingView {
  CameraView camera;
  Image image;  // h × w × 3 in [0,1]
  Image mask;   // h × w × 1 in {0,1}
  int index = 0;
  std::string name;

  void validate() const;
};

/// Radius of the camera centers around their mean, inflated by 10%.
double camera_extent(std::span<const TrainingView> views);
double camera_extent(std::span<const CameraView> cameras);

}  // namespace ocgs
