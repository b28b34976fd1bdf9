#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

namespace ocgs {

/// Uniform-grid index over a fixed point set with exact nearest-neighbour queries
/// (rings of cells are visited until no unvisited cell can hold a closer point).
class PointGrid {
 public:
  explicit PointGrid(std::span<const Eigen::Vector3d> points);

  std::size_t size() const { return points_.size(); }

  /// Indices of the k nearest points to q sorted by (distance, index). `exclude` is skipped.
  std::vector<std::size_t> knn(const Eigen::Vector3d& q, std::size_t k, std::size_t exclude = SIZE_MAX) const;

  /// Distance from q to its nearest point; the set must be non-empty.
  double nearest_distance(const Eigen::Vector3d& q) const;

 private:
  std::vector<Eigen::Vector3d> points_;
  Eigen::Vector3d origin_ = Eigen::Vector3d::Zero();
  double cell_ = 1.0;
  Eigen::Vector3i dims_ = Eigen::Vector3i::Ones();
  std::vector<std::size_t> cell_start_;
  std::vector<std::size_t> order_;

  Eigen::Vector3i cell_of(const Eigen::Vector3d& p) const;
  std::size_t flat(const Eigen::Vector3i& c) const {
    return (static_cast<std::size_t>(c.z()) * dims_.y() + c.y()) * dims_.x() + c.x();
  }
};

}  // namespace ocgs
