#include "ocgs/spatial_index.hpp"

#include <algorithm>
#include <cmath>

namespace ocgs {

PointGrid::PointGrid(std::span<const Eigen::Vector3d> points) : points_(points.begin(), points.end()) {
  const std::size_t n = points_.size();
  if (n == 0) {
    cell_start_.assign(2, 0);
    return;
  }
  Eigen::Vector3d lo = points_[0], hi = points_[0];
  for (const auto& p : points_) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
  origin_ = lo;
  const double extent = (hi - lo).maxCoeff();
  const double per_axis = std::max(1.0, std::ceil(std::cbrt(static_cast<double>(n) / 2.0)));
  cell_ = extent > 0.0 ? extent / per_axis : 1.0;
  for (int a = 0; a < 3; ++a) dims_[a] = static_cast<int>(std::floor((hi[a] - lo[a]) / cell_)) + 1;

  const std::size_t cells = static_cast<std::size_t>(dims_.x()) * dims_.y() * dims_.z();
  cell_start_.assign(cells + 1, 0);
  std::vector<std::size_t> cell_id(n);
  for (std::size_t i = 0; i < n; ++i) {
    cell_id[i] = flat(cell_of(points_[i]));
    ++cell_start_[cell_id[i] + 1];
  }
  for (std::size_t c = 0; c < cells; ++c) cell_start_[c + 1] += cell_start_[c];
  order_.resize(n);
  std::vector<std::size_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  for (std::size_t i = 0; i < n; ++i) order_[fill[cell_id[i]]++] = i;
}

Eigen::Vector3i PointGrid::cell_of(const Eigen::Vector3d& p) const {
  Eigen::Vector3i c;
  for (int a = 0; a < 3; ++a) {
    const double f = std::floor((p[a] - origin_[a]) / cell_);
    c[a] = static_cast<int>(std::clamp(f, 0.0, static_cast<double>(dims_[a] - 1)));
  }
  return c;
}

std::vector<std::size_t> PointGrid::knn(const Eigen::Vector3d& q, std::size_t k, std::size_t exclude) const {
  std::vector<std::pair<double, std::size_t>> best;  // squared distance, index
  if (points_.empty() || k == 0) return {};
  const Eigen::Vector3i c0 = cell_of(q);
  const int max_ring = dims_.maxCoeff();
  auto visit_cell = [&](const Eigen::Vector3i& c) {
    const std::size_t f = flat(c);
    for (std::size_t j = cell_start_[f]; j < cell_start_[f + 1]; ++j) {
      const std::size_t i = order_[j];
      if (i == exclude) continue;
      best.emplace_back((points_[i] - q).squaredNorm(), i);
    }
  };
  for (int r = 0; r <= max_ring; ++r) {
    for (int z = c0.z() - r; z <= c0.z() + r; ++z) {
      if (z < 0 || z >= dims_.z()) continue;
      for (int y = c0.y() - r; y <= c0.y() + r; ++y) {
        if (y < 0 || y >= dims_.y()) continue;
        for (int x = c0.x() - r; x <= c0.x() + r; ++x) {
          if (x < 0 || x >= dims_.x()) continue;
          const bool shell = std::abs(x - c0.x()) == r || std::abs(y - c0.y()) == r || std::abs(z - c0.z()) == r;
          if (shell) visit_cell({x, y, z});
        }
      }
    }
    if (best.size() >= k) {
      std::nth_element(best.begin(), best.begin() + (k - 1), best.end());
      best.resize(k);
      // Points in rings beyond r are at least r cells away.
      double kth = 0.0;
      for (const auto& b : best) kth = std::max(kth, b.first);
      const double bound = r * cell_;
      if (kth <= bound * bound) break;
    }
  }
  std::sort(best.begin(), best.end());
  if (best.size() > k) best.resize(k);
  std::vector<std::size_t> out;
  out.reserve(best.size());
  for (const auto& b : best) out.push_back(b.second);
  return out;
}

double PointGrid::nearest_distance(const Eigen::Vector3d& q) const {
  const auto nn = knn(q, 1);
  return (points_[nn.front()] - q).norm();
}

}  // namespace ocgs
