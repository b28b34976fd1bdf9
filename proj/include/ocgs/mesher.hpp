#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "ocgs/scene_model.hpp"

namespace ocgs {

struct TriangleMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::vector<std::array<std::uint8_t, 3>> colors;  // empty or one per vertex

  /// Throws a contract error for out-of-range indices or non-finite vertices.
  void validate() const;
};

/// Sparse TSDF on a regular lattice: sample (i, j, k) sits at origin + voxel_size * (i, j, k).
/// Storage is in 8×8×8 blocks allocated on demand.
class TsdfVolume {
 public:
  static constexpr int kBlock = 8;

  struct Block {
    std::array<double, kBlock * kBlock * kBlock> tsdf{};
    std::array<double, kBlock * kBlock * kBlock> weight{};
    std::array<Eigen::Vector3d, kBlock * kBlock * kBlock> color{};
  };
  using Key = std::array<int, 3>;

  TsdfVolume(const Eigen::Vector3d& origin, double voxel_size, double truncation);

  const Eigen::Vector3d& origin() const { return origin_; }
  double voxel_size() const { return voxel_; }
  double truncation() const { return trunc_; }

  /// Optional lattice bounds [lo, hi] (inclusive); samples outside are never allocated.
  void set_bounds(const Eigen::Vector3i& lo, const Eigen::Vector3i& hi);
  void set_voxel_budget(std::size_t budget) { budget_ = budget; }

  Eigen::Vector3d position(const Eigen::Vector3i& ijk) const { return origin_ + voxel_ * ijk.cast<double>(); }

  /// Allocates every block touching the axis-aligned box around p with half-size r.
  void allocate_around(const Eigen::Vector3d& p, double r);
  void allocate_block(const Key& key);

  /// nullptr when the sample is not allocated.
  const Block* block(const Key& key) const;
  Block* block(const Key& key);

  bool sample(const Eigen::Vector3i& ijk, double& tsdf, double& weight, Eigen::Vector3d* color = nullptr) const;
  void set(const Eigen::Vector3i& ijk, double tsdf, double weight, const Eigen::Vector3d& color = Eigen::Vector3d::Zero());

  /// Block keys in ascending order (the deterministic traversal order).
  std::vector<Key> keys() const;
  std::size_t block_count() const { return blocks_.size(); }
  std::size_t allocated_voxels() const { return blocks_.size() * kBlock * kBlock * kBlock; }
  double total_weight() const;

  /// Fills a dense lattice of `dims` samples from a signed distance function (weight 1).
  static TsdfVolume from_function(const Eigen::Vector3d& origin, double voxel_size, const Eigen::Vector3i& dims,
                                  const std::function<double(const Eigen::Vector3d&)>& sdf, double truncation);

 private:
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return (static_cast<std::size_t>(k[0]) * 73856093u) ^ (static_cast<std::size_t>(k[1]) * 19349663u) ^
             (static_cast<std::size_t>(k[2]) * 83492791u);
    }
  };
  Eigen::Vector3d origin_;
  double voxel_;
  double trunc_;
  bool bounded_ = false;
  Eigen::Vector3i lo_ = Eigen::Vector3i::Zero(), hi_ = Eigen::Vector3i::Zero();
  std::size_t budget_ = std::numeric_limits<std::size_t>::max();
  std::unordered_map<Key, std::unique_ptr<Block>, KeyHash> blocks_;

  static Key key_of(const Eigen::Vector3i& ijk, int& local);
};

/// A depth map to fuse: camera-space z per pixel (0 = invalid) with colors.
struct DepthFrame {
  CameraView camera;
  Image depth;  // h × w
  Image color;  // h × w × 3
};

struct FusionParams {
  double voxel_size = 0.0;
  double d_trunc = std::numeric_limits<double>::infinity();  // max depth integrated
  double band_voxels = 5.0;                                  // truncation band in voxels
  std::size_t voxel_budget = std::size_t{1} << 26;
};

/// Weighted TSDF averaging of depth frames (weight 1 per observation).
/// Blocks are allocated around every valid back-projected pixel of every frame first,
/// so the result depends on frame order only through floating-point rounding.
void integrate(TsdfVolume& volume, std::span<const DepthFrame> frames);

/// Renders median depth and color of every view (depth zeroed where M = 0 if masks are
/// used or beyond d_trunc) and fuses them.
TsdfVolume fuse_bounded(const SplatSet& splats, std::span<const TrainingView> views, const FusionParams& params,
                        bool use_masks);

/// Parameter-free object mode: bounds from the splat centers' box inflated by 10%,
/// voxel size 0.004 × its largest extent, no depth or mask truncation.
TsdfVolume fuse_object(const SplatSet& splats, std::span<const TrainingView> views,
                       std::size_t voxel_budget = std::size_t{1} << 26);

/// Zero-isosurface extraction; cubes with a zero-weight corner are skipped.
/// Triangles are wound counter-clockwise seen from the positive side.
TriangleMesh marching_cubes(const TsdfVolume& volume);

/// Drops triangles whose centroid projects into at least one image and lands outside the
/// mask in every image it projects into.
TriangleMesh cull_mesh_by_masks(const TriangleMesh& mesh, std::span<const TrainingView> views);

/// Euler characteristic V - E + F over referenced vertices and unique edges.
long euler_characteristic(const TriangleMesh& mesh);

/// Area-weighted uniform surface samples.
std::vector<Eigen::Vector3d> sample_surface(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed);

}  // namespace ocgs
