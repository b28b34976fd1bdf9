#include "ocgs/mesher.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "ocgs/detail/mc_tables.hpp"
#include "ocgs/error.hpp"
#include "ocgs/parallel.hpp"
#include "ocgs/rasterizer.hpp"

namespace ocgs {

namespace {

constexpr int kB = TsdfVolume::kBlock;

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

int local_index(int x, int y, int z) { return (z * kB + y) * kB + x; }

}  // namespace

void TriangleMesh::validate() const {
  for (const auto& v : vertices)
    if (!v.allFinite()) throw Error(ErrorKind::contract, "mesh has a non-finite vertex");
  for (const auto& t : triangles)
    for (auto i : t)
      if (i >= vertices.size()) throw Error(ErrorKind::contract, "mesh triangle index out of range");
  if (!colors.empty() && colors.size() != vertices.size())
    throw Error(ErrorKind::contract, "mesh color count does not match vertex count");
}

TsdfVolume::TsdfVolume(const Eigen::Vector3d& origin, double voxel_size, double truncation)
    : origin_(origin), voxel_(voxel_size), trunc_(truncation) {
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) throw Error(ErrorKind::contract, "voxel size must be positive");
  if (!(truncation > 0.0)) throw Error(ErrorKind::contract, "truncation distance must be positive");
}

void TsdfVolume::set_bounds(const Eigen::Vector3i& lo, const Eigen::Vector3i& hi) {
  bounded_ = true;
  lo_ = lo;
  hi_ = hi;
}

TsdfVolume::Key TsdfVolume::key_of(const Eigen::Vector3i& ijk, int& local) {
  Key k{floor_div(ijk.x(), kB), floor_div(ijk.y(), kB), floor_div(ijk.z(), kB)};
  local = local_index(ijk.x() - k[0] * kB, ijk.y() - k[1] * kB, ijk.z() - k[2] * kB);
  return k;
}

void TsdfVolume::allocate_block(const Key& key) {
  if (blocks_.count(key)) return;
  if (allocated_voxels() + kB * kB * kB > budget_)
    throw Error(ErrorKind::resource, "TSDF voxel budget of " + std::to_string(budget_) +
                                         " exceeded; use a larger voxel size");
  blocks_.emplace(key, std::make_unique<Block>());
}

void TsdfVolume::allocate_around(const Eigen::Vector3d& p, double r) {
  Eigen::Vector3i lo, hi;
  for (int a = 0; a < 3; ++a) {
    lo[a] = static_cast<int>(std::floor((p[a] - r - origin_[a]) / voxel_));
    hi[a] = static_cast<int>(std::ceil((p[a] + r - origin_[a]) / voxel_));
    if (bounded_) lo[a] = std::max(lo[a], lo_[a]), hi[a] = std::min(hi[a], hi_[a]);
    if (lo[a] > hi[a]) return;
  }
  for (int z = floor_div(lo.z(), kB); z <= floor_div(hi.z(), kB); ++z)
    for (int y = floor_div(lo.y(), kB); y <= floor_div(hi.y(), kB); ++y)
      for (int x = floor_div(lo.x(), kB); x <= floor_div(hi.x(), kB); ++x) allocate_block({x, y, z});
}

const TsdfVolume::Block* TsdfVolume::block(const Key& key) const {
  auto it = blocks_.find(key);
  return it == blocks_.end() ? nullptr : it->second.get();
}

TsdfVolume::Block* TsdfVolume::block(const Key& key) {
  auto it = blocks_.find(key);
  return it == blocks_.end() ? nullptr : it->second.get();
}

bool TsdfVolume::sample(const Eigen::Vector3i& ijk, double& tsdf, double& weight, Eigen::Vector3d* color) const {
  int local;
  const Block* b = block(key_of(ijk, local));
  if (!b) return false;
  tsdf = b->tsdf[local];
  weight = b->weight[local];
  if (color) *color = b->color[local];
  return true;
}

void TsdfVolume::set(const Eigen::Vector3i& ijk, double tsdf, double weight, const Eigen::Vector3d& color) {
  int local;
  const Key k = key_of(ijk, local);
  allocate_block(k);
  Block* b = block(k);
  b->tsdf[local] = tsdf;
  b->weight[local] = weight;
  b->color[local] = color;
}

std::vector<TsdfVolume::Key> TsdfVolume::keys() const {
  std::vector<Key> out;
  out.reserve(blocks_.size());
  for (const auto& [k, b] : blocks_) out.push_back(k);
  std::sort(out.begin(), out.end());
  return out;
}

double TsdfVolume::total_weight() const {
  double s = 0.0;
  for (const Key& k : keys())
    for (double w : block(k)->weight) s += w;
  return s;
}

TsdfVolume TsdfVolume::from_function(const Eigen::Vector3d& origin, double voxel_size, const Eigen::Vector3i& dims,
                                     const std::function<double(const Eigen::Vector3d&)>& sdf, double truncation) {
  TsdfVolume v(origin, voxel_size, truncation);
  v.set_bounds(Eigen::Vector3i::Zero(), dims - Eigen::Vector3i::Ones());
  for (int z = 0; z < dims.z(); ++z)
    for (int y = 0; y < dims.y(); ++y)
      for (int x = 0; x < dims.x(); ++x) {
        const Eigen::Vector3i ijk(x, y, z);
        const double d = std::clamp(sdf(v.position(ijk)), -truncation, truncation);
        v.set(ijk, d, 1.0, Eigen::Vector3d::Constant(0.5));
      }
  return v;
}

namespace {

// Depth (and color) at continuous pixel coordinates; bilinear when the four surrounding
// pixel centers are valid and agree within `tol`, else the containing pixel.
bool sample_depth(const DepthFrame& f, double u, double v, double tol, double& depth, Eigen::Vector3d& color) {
  const int W = f.depth.width, H = f.depth.height;
  const double fx = u - 0.5, fy = v - 0.5;
  const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
  if (x0 >= 0 && y0 >= 0 && x0 + 1 < W && y0 + 1 < H) {
    const double d00 = f.depth.at(x0, y0), d10 = f.depth.at(x0 + 1, y0);
    const double d01 = f.depth.at(x0, y0 + 1), d11 = f.depth.at(x0 + 1, y0 + 1);
    const double lo = std::min({d00, d10, d01, d11}), hi = std::max({d00, d10, d01, d11});
    if (lo > 0.0 && hi - lo <= tol) {
      const double ax = fx - x0, ay = fy - y0;
      const double w00 = (1 - ax) * (1 - ay), w10 = ax * (1 - ay), w01 = (1 - ax) * ay, w11 = ax * ay;
      depth = w00 * d00 + w10 * d10 + w01 * d01 + w11 * d11;
      for (int c = 0; c < 3; ++c)
        color[c] = w00 * f.color.at(x0, y0, c) + w10 * f.color.at(x0 + 1, y0, c) + w01 * f.color.at(x0, y0 + 1, c) +
                   w11 * f.color.at(x0 + 1, y0 + 1, c);
      return true;
    }
  }
  const int ix = static_cast<int>(std::floor(u)), iy = static_cast<int>(std::floor(v));
  if (ix < 0 || iy < 0 || ix >= W || iy >= H) return false;
  depth = f.depth.at(ix, iy);
  if (!(depth > 0.0)) return false;
  for (int c = 0; c < 3; ++c) color[c] = f.color.at(ix, iy, c);
  return true;
}

}  // namespace

void integrate(TsdfVolume& vol, std::span<const DepthFrame> frames) {
  const double trunc = vol.truncation();
  for (const DepthFrame& f : frames) {
    const Eigen::Matrix3d Rt = f.camera.rotation().transpose();
    const Eigen::Vector3d c = f.camera.center();
    for (int y = 0; y < f.depth.height; ++y)
      for (int x = 0; x < f.depth.width; ++x) {
        const double d = f.depth.at(x, y);
        if (d > 0.0) vol.allocate_around(c + Rt * (d * f.camera.pixel_ray(x, y)), trunc);
      }
  }
  const std::vector<TsdfVolume::Key> keys = vol.keys();
  parallel_for(keys.size(), [&](std::size_t bi) {
    const TsdfVolume::Key& key = keys[bi];
    TsdfVolume::Block* b = vol.block(key);
    for (int lz = 0; lz < kB; ++lz)
      for (int ly = 0; ly < kB; ++ly)
        for (int lx = 0; lx < kB; ++lx) {
          const Eigen::Vector3i ijk(key[0] * kB + lx, key[1] * kB + ly, key[2] * kB + lz);
          const Eigen::Vector3d p = vol.position(ijk);
          const int li = local_index(lx, ly, lz);
          for (const DepthFrame& f : frames) {
            const Eigen::Vector3d pc = f.camera.rotation() * p + f.camera.translation();
            if (!(pc.z() > 1e-9)) continue;
            const double u = f.camera.fx * pc.x() / pc.z() + f.camera.cx;
            const double v = f.camera.fy * pc.y() / pc.z() + f.camera.cy;
            double depth;
            Eigen::Vector3d color;
            if (!sample_depth(f, u, v, trunc, depth, color)) continue;
            const double sdf = depth - pc.z();
            if (sdf < -trunc) continue;
            const double val = std::min(sdf, trunc);
            const double w = b->weight[li];
            b->tsdf[li] = (b->tsdf[li] * w + val) / (w + 1.0);
            b->color[li] = (b->color[li] * w + color) / (w + 1.0);
            b->weight[li] = w + 1.0;
          }
        }
  });
}

namespace {

std::vector<DepthFrame> render_frames(const SplatSet& splats, std::span<const TrainingView> views, double d_trunc,
                                      bool use_masks) {
  std::vector<DepthFrame> frames;
  frames.reserve(views.size());
  for (const TrainingView& v : views) {
    const RenderOutput out = render_forward(splats, v.camera);
    DepthFrame f{v.camera, out.depth, out.color};
    for (int y = 0; y < f.depth.height; ++y)
      for (int x = 0; x < f.depth.width; ++x) {
        double& d = f.depth.at(x, y);
        if (d > d_trunc || (use_masks && v.mask.at(x, y) < 0.5)) d = 0.0;
      }
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace

TsdfVolume fuse_bounded(const SplatSet& splats, std::span<const TrainingView> views, const FusionParams& p,
                        bool use_masks) {
  if (!(p.d_trunc > 0.0)) throw Error(ErrorKind::contract, "d_trunc must be positive");
  TsdfVolume vol(Eigen::Vector3d::Zero(), p.voxel_size, p.band_voxels * p.voxel_size);
  vol.set_voxel_budget(p.voxel_budget);
  const auto frames = render_frames(splats, views, p.d_trunc, use_masks);
  integrate(vol, frames);
  return vol;
}

TsdfVolume fuse_object(const SplatSet& splats, std::span<const TrainingView> views, std::size_t budget) {
  if (splats.empty()) throw Error(ErrorKind::contract, "object-mode fusion needs at least one splat");
  Eigen::Vector3d lo = splats.position[0], hi = splats.position[0];
  for (const auto& p : splats.position) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
  const Eigen::Vector3d center = 0.5 * (lo + hi);
  Eigen::Vector3d half = 0.5 * 1.1 * (hi - lo);
  double extent = 2.0 * half.maxCoeff();
  if (!(extent > 0.0)) {
    // A single splat (or coincident centers): fall back to the splats' own footprint.
    double s = 0.0;
    for (const auto& l : splats.log_scale) s = std::max(s, std::exp(l.maxCoeff()));
    extent = 1.1 * 6.0 * s;
  }
  half = half.cwiseMax(Eigen::Vector3d::Constant(1e-3 * extent));
  const double voxel = 0.004 * extent;
  const Eigen::Vector3d origin = center - half;
  TsdfVolume vol(origin, voxel, 5.0 * voxel);
  Eigen::Vector3i dims;
  for (int a = 0; a < 3; ++a) dims[a] = static_cast<int>(std::ceil(2.0 * half[a] / voxel)) + 1;
  vol.set_bounds(Eigen::Vector3i::Zero(), dims - Eigen::Vector3i::Ones());
  vol.set_voxel_budget(budget);
  const auto frames = render_frames(splats, views, std::numeric_limits<double>::infinity(), false);
  integrate(vol, frames);
  return vol;
}

TriangleMesh marching_cubes(const TsdfVolume& vol) {
  static const int corner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                   {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  static const int edge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                  {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
  struct EdgeHash {
    std::size_t operator()(const std::array<int, 4>& k) const {
      return (static_cast<std::size_t>(k[0]) * 73856093u) ^ (static_cast<std::size_t>(k[1]) * 19349663u) ^
             (static_cast<std::size_t>(k[2]) * 83492791u) ^ static_cast<std::size_t>(k[3]);
    }
  };
  TriangleMesh mesh;
  std::unordered_map<std::array<int, 4>, std::uint32_t, EdgeHash> edge_vertex;
  for (const TsdfVolume::Key& key : vol.keys()) {
    for (int lz = 0; lz < kB; ++lz)
      for (int ly = 0; ly < kB; ++ly)
        for (int lx = 0; lx < kB; ++lx) {
          const Eigen::Vector3i base(key[0] * kB + lx, key[1] * kB + ly, key[2] * kB + lz);
          double val[8];
          Eigen::Vector3d col[8];
          bool ok = true;
          int cube = 0;
          for (int c = 0; c < 8 && ok; ++c) {
            double w;
            ok = vol.sample(base + Eigen::Vector3i(corner[c][0], corner[c][1], corner[c][2]), val[c], w, &col[c]) &&
                 w > 0.0;
            if (ok && val[c] < 0.0) cube |= 1 << c;
          }
          if (!ok || detail::kMcEdgeTable[cube] == 0) continue;
          std::uint32_t ids[12];
          for (int e = 0; e < 12; ++e) {
            if (!(detail::kMcEdgeTable[cube] & (1 << e))) continue;
            const int a = edge[e][0], b = edge[e][1];
            Eigen::Vector3i pa = base + Eigen::Vector3i(corner[a][0], corner[a][1], corner[a][2]);
            Eigen::Vector3i pb = base + Eigen::Vector3i(corner[b][0], corner[b][1], corner[b][2]);
            int axis = 0;
            while (pa[axis] == pb[axis]) ++axis;
            const bool swap = pa[axis] > pb[axis];
            const Eigen::Vector3i lo = swap ? pb : pa;
            const std::array<int, 4> ek{lo.x(), lo.y(), lo.z(), axis};
            auto it = edge_vertex.find(ek);
            if (it != edge_vertex.end()) {
              ids[e] = it->second;
              continue;
            }
            // Interpolate from the lower endpoint so shared edges agree bit-for-bit.
            const double v0 = swap ? val[b] : val[a], v1 = swap ? val[a] : val[b];
            const Eigen::Vector3d c0 = swap ? col[b] : col[a], c1 = swap ? col[a] : col[b];
            const double t = v0 / (v0 - v1);
            Eigen::Vector3d p = vol.position(lo);
            p[axis] += t * vol.voxel_size();
            const Eigen::Vector3d c = (1.0 - t) * c0 + t * c1;
            const auto id = static_cast<std::uint32_t>(mesh.vertices.size());
            mesh.vertices.push_back(p);
            std::array<std::uint8_t, 3> rgb;
            for (int ch = 0; ch < 3; ++ch)
              rgb[ch] = static_cast<std::uint8_t>(std::lround(std::clamp(c[ch], 0.0, 1.0) * 255.0));
            mesh.colors.push_back(rgb);
            edge_vertex.emplace(ek, id);
            ids[e] = id;
          }
          for (int t = 0; detail::kMcTriTable[cube][t] != -1; t += 3) {
            const std::uint32_t i0 = ids[detail::kMcTriTable[cube][t]];
            const std::uint32_t i1 = ids[detail::kMcTriTable[cube][t + 1]];
            const std::uint32_t i2 = ids[detail::kMcTriTable[cube][t + 2]];
            if (i0 == i1 || i1 == i2 || i0 == i2) continue;
            mesh.triangles.push_back({i0, i2, i1});
          }
        }
  }
  return mesh;
}

TriangleMesh cull_mesh_by_masks(const TriangleMesh& mesh, std::span<const TrainingView> views) {
  TriangleMesh out;
  out.vertices = mesh.vertices;
  out.colors = mesh.colors;
  for (const auto& tri : mesh.triangles) {
    const Eigen::Vector3d centroid = (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
    bool seen = false, in_mask = false;
    for (const TrainingView& v : views) {
      const Eigen::Vector3d pc = v.camera.rotation() * centroid + v.camera.translation();
      if (!(pc.z() > 0.0)) continue;
      const double u = v.camera.fx * pc.x() / pc.z() + v.camera.cx;
      const double w = v.camera.fy * pc.y() / pc.z() + v.camera.cy;
      const int ix = static_cast<int>(std::floor(u)), iy = static_cast<int>(std::floor(w));
      if (ix < 0 || iy < 0 || ix >= v.camera.width || iy >= v.camera.height) continue;
      seen = true;
      if (v.mask.at(ix, iy) >= 0.5) {
        in_mask = true;
        break;
      }
    }
    if (!seen || in_mask) out.triangles.push_back(tri);
  }
  return out;
}

long euler_characteristic(const TriangleMesh& mesh) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
  std::set<std::uint32_t> verts;
  for (const auto& t : mesh.triangles)
    for (int i = 0; i < 3; ++i) {
      const std::uint32_t a = t[i], b = t[(i + 1) % 3];
      edges.insert({std::min(a, b), std::max(a, b)});
      verts.insert(a);
    }
  return static_cast<long>(verts.size()) - static_cast<long>(edges.size()) + static_cast<long>(mesh.triangles.size());
}

std::vector<Eigen::Vector3d> sample_surface(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed) {
  std::vector<double> cum;
  cum.reserve(mesh.triangles.size());
  double total = 0.0;
  for (const auto& t : mesh.triangles) {
    total += 0.5 * (mesh.vertices[t[1]] - mesh.vertices[t[0]]).cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]).norm();
    cum.push_back(total);
  }
  std::vector<Eigen::Vector3d> out;
  if (!(total > 0.0)) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double r = U(rng) * total;
    const std::size_t k = std::min<std::size_t>(std::upper_bound(cum.begin(), cum.end(), r) - cum.begin(), cum.size() - 1);
    const auto& t = mesh.triangles[k];
    const double s = std::sqrt(U(rng)), b = U(rng);
    out.push_back((1 - s) * mesh.vertices[t[0]] + s * (1 - b) * mesh.vertices[t[1]] + s * b * mesh.vertices[t[2]]);
  }
  return out;
}

}  // namespace ocgs
