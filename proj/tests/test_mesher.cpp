#include <gtest/gtest.h>

#include <Eigen/Geometry>

#include <random>

#include "helpers.hpp"
#include "ocgs/error.hpp"
#include "ocgs/mesh_io.hpp"
#include "ocgs/mesher.hpp"
#include "ocgs/metrics.hpp"

using namespace ocgs;

namespace {

// Tangent discs covering the sphere |x - c| = r.
SplatSet splat_sphere(std::size_t n, double r, const Eigen::Vector3d& c = Eigen::Vector3d::Zero(),
                      std::uint64_t seed = 1) {
  SplatSet s;
  s.sh_degree = 0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  const double disc = 2.0 * r / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d d = Eigen::Vector3d(N(rng), N(rng), N(rng)).normalized();
    const Eigen::Quaterniond q = Eigen::Quaterniond::FromTwoVectors(Eigen::Vector3d::UnitZ(), d);
    const double sh[3] = {0.5, 0.1, -0.3};
    s.push_back(c + r * d, {q.w(), q.x(), q.y(), q.z()}, Eigen::Vector2d::Constant(std::log(disc)), 3.0, sh);
  }
  return s;
}

std::vector<TrainingView> ring_views(int n, int size, double dist, const Eigen::Vector3d& c = Eigen::Vector3d::Zero()) {
  std::vector<TrainingView> views(n);
  for (int i = 0; i < n; ++i) {
    const double az = 2.0 * M_PI * i / n, el = (i % 3 - 1) * 0.45;
    const Eigen::Vector3d eye = c + dist * Eigen::Vector3d(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                                                           std::sin(el));
    views[i].camera = CameraView::look_at(eye, c, {0, 0, 1}, size, size, 0.9);
    views[i].index = i;
    views[i].image = Image(size, size, 3, 0.5);
    views[i].mask = Image(size, size, 1, 1.0);
  }
  return views;
}

TsdfVolume sphere_sdf(double h = 0.05, int n = 61, double sign = 1.0, double radius = 1.0) {
  const Eigen::Vector3i dims = Eigen::Vector3i::Constant(n);
  return TsdfVolume::from_function(Eigen::Vector3d::Constant(-0.5 * h * (n - 1)), h, dims,
                                   [sign, radius](const Eigen::Vector3d& x) { return sign * (x.norm() - radius); }, 5 * h);
}

Eigen::Vector3d face_normal(const TriangleMesh& m, const std::array<std::uint32_t, 3>& t) {
  return (m.vertices[t[1]] - m.vertices[t[0]]).cross(m.vertices[t[2]] - m.vertices[t[0]]);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::usage;
}

}  // namespace

TEST(MarchingCubes, AnalyticSphereRadiiAndTopology) {
  const double h = 0.05;
  const TriangleMesh m = marching_cubes(sphere_sdf(h));
  ASSERT_FALSE(m.triangles.empty());
  EXPECT_NO_THROW(m.validate());
  for (const auto& v : m.vertices) EXPECT_NEAR(v.norm(), 1.0, h);
  EXPECT_EQ(euler_characteristic(m), 2);
}

TEST(MarchingCubes, OutwardWindingAndSignFlip) {
  // off-lattice radius: a corner with value exactly 0 would be classified differently
  // after the sign flip
  const TriangleMesh m = marching_cubes(sphere_sdf(0.05, 61, 1.0, 0.9873));
  auto degenerate = [](const TriangleMesh& mm, const auto& t) { return face_normal(mm, t).norm() < 1e-10; };
  for (const auto& t : m.triangles)
    if (!degenerate(m, t)) EXPECT_GT(face_normal(m, t).dot(m.vertices[t[0]]), 0.0);
  const TriangleMesh f = marching_cubes(sphere_sdf(0.05, 61, -1.0, 0.9873));
  ASSERT_EQ(f.triangles.size(), m.triangles.size());
  ASSERT_EQ(f.vertices.size(), m.vertices.size());
  for (const auto& t : f.triangles)
    if (!degenerate(f, t)) EXPECT_LT(face_normal(f, t).dot(f.vertices[t[0]]), 0.0);
  double far = 0.0;
  for (std::size_t i = 0; i < m.vertices.size(); ++i) far = std::max(far, (m.vertices[i] - f.vertices[i]).norm());
  EXPECT_LT(far, 1e-12);
}

TEST(MarchingCubes, NoCrossingGivesEmptyMesh) {
  const TsdfVolume v = TsdfVolume::from_function(Eigen::Vector3d::Zero(), 0.1, Eigen::Vector3i::Constant(10),
                                                 [](const Eigen::Vector3d&) { return 0.3; }, 0.5);
  EXPECT_TRUE(marching_cubes(v).triangles.empty());
  EXPECT_TRUE(marching_cubes(TsdfVolume(Eigen::Vector3d::Zero(), 0.1, 0.5)).triangles.empty());
}

TEST(Fusion, SplatSphereSurfaceWithinTwoVoxels) {
  const SplatSet s = splat_sphere(20000, 1.0);
  const auto views = ring_views(20, 128, 3.0);
  const TsdfVolume vol = fuse_object(s, views);
  const TriangleMesh m = marching_cubes(vol);
  ASSERT_FALSE(m.triangles.empty());
  const double voxel = vol.voxel_size();
  EXPECT_NEAR(voxel, 0.004 * 1.1 * 2.0, 0.05 * voxel);
  const auto pts = sample_surface(m, 20000, 3);
  double mean = 0.0;
  for (const auto& p : pts) mean += std::abs(p.norm() - 1.0);
  mean /= static_cast<double>(pts.size());
  EXPECT_LE(mean, 2.0 * voxel);
}

TEST(Fusion, ZeroMasksGiveEmptyVolume) {
  const SplatSet s = splat_sphere(3000, 1.0);
  auto views = ring_views(6, 48, 3.0);
  for (auto& v : views) std::fill(v.mask.data.begin(), v.mask.data.end(), 0.0);
  FusionParams p;
  p.voxel_size = 0.05;
  p.d_trunc = 10.0;
  const TsdfVolume vol = fuse_bounded(s, views, p, true);
  EXPECT_EQ(vol.total_weight(), 0.0);
  EXPECT_TRUE(marching_cubes(vol).triangles.empty());
  // ignoring the masks restores the surface
  EXPECT_FALSE(marching_cubes(fuse_bounded(s, views, p, false)).triangles.empty());
  p.d_trunc = 0.0;
  EXPECT_EQ(kind_of([&] { fuse_bounded(s, views, p, false); }), ErrorKind::contract);
}

TEST(Fusion, InvalidDepthPixelsAreSkipped) {
  TsdfVolume vol(Eigen::Vector3d::Constant(-2), 0.05, 0.25);
  DepthFrame f;
  f.camera = testing_helpers::front_camera(16, 16);
  f.depth = Image(16, 16, 1, 0.0);
  f.color = Image(16, 16, 3, 0.5);
  integrate(vol, std::span<const DepthFrame>(&f, 1));
  EXPECT_EQ(vol.block_count(), 0u);
  f.depth.at(8, 8) = 3.0;
  integrate(vol, std::span<const DepthFrame>(&f, 1));
  EXPECT_GT(vol.block_count(), 0u);
  EXPECT_GT(vol.total_weight(), 0.0);
}

TEST(Fusion, FrameOrderInvariant) {
  const SplatSet s = splat_sphere(4000, 1.0);
  const auto views = ring_views(8, 48, 3.0);
  FusionParams p;
  p.voxel_size = 0.04;
  p.d_trunc = 10.0;
  auto reversed = views;
  std::reverse(reversed.begin(), reversed.end());
  const TriangleMesh a = marching_cubes(fuse_bounded(s, views, p, false));
  const TriangleMesh b = marching_cubes(fuse_bounded(s, reversed, p, false));
  ASSERT_EQ(a.triangles, b.triangles);
  for (std::size_t i = 0; i < a.vertices.size(); ++i) EXPECT_LT((a.vertices[i] - b.vertices[i]).norm(), 1e-10);
}

TEST(Fusion, VoxelBudgetIsResourceError) {
  const SplatSet s = splat_sphere(2000, 1.0);
  const auto views = ring_views(4, 32, 3.0);
  EXPECT_EQ(kind_of([&] { fuse_object(s, views, 1000); }), ErrorKind::resource);
}

TEST(Fusion, ObjectModeIsScaleInvariant) {
  const SplatSet s = splat_sphere(3000, 1.0);
  const auto views = ring_views(6, 48, 3.0);
  const double k = 2.5;
  SplatSet big = s;
  for (std::size_t i = 0; i < big.size(); ++i) {
    big.position[i] *= k;
    big.log_scale[i].array() += std::log(k);
  }
  auto bviews = views;
  for (auto& v : bviews) v.camera.pose.topRightCorner<3, 1>() *= k;
  const TriangleMesh a = marching_cubes(fuse_object(s, views));
  const TriangleMesh b = marching_cubes(fuse_object(big, bviews));
  ASSERT_FALSE(a.triangles.empty());
  const double na = static_cast<double>(a.triangles.size()), nb = static_cast<double>(b.triangles.size());
  EXPECT_LT(std::abs(na - nb) / na, 0.01);
  std::vector<Eigen::Vector3d> va = a.vertices;
  for (auto& v : va) v *= k;
  EXPECT_LT(chamfer_distance(va, b.vertices), 1e-6 * k);
}

TEST(Fusion, SingleSplatGivesSmallPatch) {
  SplatSet s;
  s.sh_degree = 0;
  testing_helpers::add_plain(s, {0, 0, 0}, 0.2, 0.95, {0.5, 0.5, 0.5});
  std::vector<TrainingView> views(3);
  for (int i = 0; i < 3; ++i) {
    views[i].camera = CameraView::look_at({0.3 * (i - 1), 0.2 * (i % 2), -3}, {0, 0, 0}, {0, -1, 0}, 48, 48, 0.6);
    views[i].image = Image(48, 48, 3);
    views[i].mask = Image(48, 48, 1, 1.0);
  }
  const TriangleMesh m = marching_cubes(fuse_object(s, views));
  EXPECT_FALSE(m.triangles.empty());
  EXPECT_NO_THROW(m.validate());
  for (const auto& v : m.vertices) EXPECT_LT(v.norm(), 1.0);
  EXPECT_EQ(kind_of([&] { fuse_object(SplatSet{}, views); }), ErrorKind::contract);
}

TEST(Cull, MasksSelectObjects) {
  SplatSet s = splat_sphere(3000, 0.5, {-0.8, 0, 0});
  const SplatSet s2 = splat_sphere(3000, 0.5, {0.8, 0, 0}, 2);
  for (std::size_t k = 0; k < s2.size(); ++k) {
    s.push_copy(0);
    s.position.back() = s2.position[k];
    s.rotation.back() = s2.rotation[k];
  }
  std::vector<TrainingView> views(4);
  for (int i = 0; i < 4; ++i) {
    views[i].camera = CameraView::look_at({0.4 * (i - 1.5), -0.3 + 0.2 * i, -4}, {0, 0, 0}, {0, -1, 0}, 64, 48, 0.9);
    views[i].image = Image(64, 48, 3);
    views[i].mask = Image(64, 48, 1, 1.0);
  }
  FusionParams p;
  p.voxel_size = 0.03;
  p.d_trunc = 10.0;
  const TriangleMesh m = marching_cubes(fuse_bounded(s, views, p, false));
  ASSERT_FALSE(m.triangles.empty());
  EXPECT_EQ(cull_mesh_by_masks(m, views).triangles, m.triangles);

  auto zero = views;
  for (auto& v : zero) std::fill(v.mask.data.begin(), v.mask.data.end(), 0.0);
  EXPECT_TRUE(cull_mesh_by_masks(m, zero).triangles.empty());

  // mask only the left object (negative x) in every view
  auto left = views;
  for (auto& v : left) {
    const Eigen::Vector3d c = v.camera.rotation() * Eigen::Vector3d(0, 0, 0) + v.camera.translation();
    const double split = v.camera.fx * c.x() / c.z() + v.camera.cx;
    for (int y = 0; y < v.mask.height; ++y)
      for (int x = 0; x < v.mask.width; ++x) v.mask.at(x, y) = x + 0.5 < split ? 1.0 : 0.0;
  }
  const TriangleMesh c = cull_mesh_by_masks(m, left);
  ASSERT_FALSE(c.triangles.empty());
  std::size_t left_count = 0;
  for (const auto& t : m.triangles) left_count += m.vertices[t[0]].x() < 0.0;
  for (const auto& t : c.triangles) EXPECT_LT(c.vertices[t[0]].x(), 0.0);
  EXPECT_GT(static_cast<double>(c.triangles.size()), 0.95 * static_cast<double>(left_count));
}

TEST(MeshIo, PlyAndObjRoundTrip) {
  testing_helpers::TempDir dir("mesh_io");
  TriangleMesh m = marching_cubes(sphere_sdf(0.2, 15));
  ASSERT_FALSE(m.triangles.empty());
  m.colors.assign(m.vertices.size(), {10, 200, 30});
  write_mesh(dir.path / "a.ply", m);
  const TriangleMesh p = read_mesh(dir.path / "a.ply");
  EXPECT_EQ(p.vertices, m.vertices);
  EXPECT_EQ(p.triangles, m.triangles);
  EXPECT_EQ(p.colors, m.colors);
  write_mesh(dir.path / "a.obj", m);
  const TriangleMesh o = read_mesh(dir.path / "a.obj");
  EXPECT_EQ(o.vertices, m.vertices);
  EXPECT_EQ(o.triangles, m.triangles);
  EXPECT_TRUE(o.colors.empty());
  EXPECT_EQ(euler_characteristic(o), euler_characteristic(m));
}

TEST(SampleSurface, AreaWeightedOnSphere) {
  const TriangleMesh m = marching_cubes(sphere_sdf(0.05));
  const auto pts = sample_surface(m, 5000, 1);
  ASSERT_EQ(pts.size(), 5000u);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : pts) {
    EXPECT_NEAR(p.norm(), 1.0, 0.05);
    mean += p;
  }
  EXPECT_LT((mean / 5000.0).norm(), 0.05);
  EXPECT_EQ(sample_surface(m, 100, 9), sample_surface(m, 100, 9));
}
