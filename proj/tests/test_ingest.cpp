#include <gtest/gtest.h>

#include <fstream>

#include "helpers.hpp"
#include "ocgs/colmap.hpp"
#include "ocgs/error.hpp"
#include "ocgs/image.hpp"
#include "ocgs/ingest.hpp"
#include "ocgs/sh.hpp"
#include "ocgs/splat_io.hpp"

using namespace ocgs;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::usage;
}

SparseModel small_model() {
  SparseModel m;
  m.cameras[1] = {1, "PINHOLE", 8, 6, {7.5, 7.0, 4.0, 3.0}};
  m.cameras[2] = {2, "SIMPLE_RADIAL", 8, 6, {6.0, 4.1, 2.9, 0.01}};
  for (std::uint32_t i = 0; i < 3; ++i) {
    const CameraView cam = CameraView::look_at({3.0 * std::cos(i), 0.3 * i, 3.0 * std::sin(i)}, {0, 0, 0},
                                               {0, -1, 0}, 8, 6, 1.0);
    m.images.push_back(image_record_from_camera(cam, i + 1, i == 2 ? 2 : 1, "img_" + std::to_string(i) + ".png"));
  }
  m.points = {{0, 0, 0}, {0.1, 0, 0}, {0, 0.2, 0}, {0, 0, 0.3}, {1, 1, 1}};
  m.colors = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.5, 0.5, 0.5}, {0.25, 1, 0}};
  m.point_ids = {10, 11, 12, 13, 14};
  return m;
}

void expect_same(const SparseModel& a, const SparseModel& b, double tol) {
  ASSERT_EQ(a.cameras.size(), b.cameras.size());
  for (const auto& [id, c] : a.cameras) {
    const ColmapCamera& d = b.cameras.at(id);
    EXPECT_EQ(c.model, d.model);
    EXPECT_EQ(c.width, d.width);
    EXPECT_EQ(c.height, d.height);
    ASSERT_EQ(c.params.size(), d.params.size());
    for (std::size_t k = 0; k < c.params.size(); ++k) EXPECT_LE(std::abs(c.params[k] - d.params[k]), tol);
  }
  ASSERT_EQ(a.images.size(), b.images.size());
  for (std::size_t i = 0; i < a.images.size(); ++i) {
    EXPECT_EQ(a.images[i].name, b.images[i].name);
    EXPECT_EQ(a.images[i].camera_id, b.images[i].camera_id);
    EXPECT_LE((a.images[i].qvec - b.images[i].qvec).norm(), tol);
    EXPECT_LE((a.images[i].tvec - b.images[i].tvec).norm(), tol);
  }
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    EXPECT_LE((a.points[i] - b.points[i]).norm(), tol);
    EXPECT_LT((a.colors[i] - b.colors[i]).norm(), 1.0 / 255.0);
    EXPECT_EQ(a.point_ids[i], b.point_ids[i]);
  }
}

}  // namespace

TEST(Colmap, TextAndBinaryRoundTrip) {
  testing_helpers::TempDir dir("colmap_rt");
  const SparseModel m = small_model();
  write_colmap_text(dir.path / "txt", m);
  write_colmap_binary(dir.path / "bin", m);
  const SparseModel t = parse_colmap(dir.path / "txt");
  const SparseModel b = parse_colmap(dir.path / "bin");
  expect_same(m, t, 1e-9);
  expect_same(m, b, 0.0);
  expect_same(t, b, 1e-9);
}

TEST(Colmap, CameraForReproducesPose) {
  const SparseModel m = small_model();
  const CameraView cam = CameraView::look_at({3, 0, 0}, {0, 0, 0}, {0, -1, 0}, 8, 6, 1.0);
  const ImageRecord r = image_record_from_camera(cam, 1, 1, "x.png");
  const CameraView back = m.camera_for(r);
  EXPECT_LT((back.pose - cam.pose).norm(), 1e-12);
  EXPECT_DOUBLE_EQ(back.fx, 7.5);
  EXPECT_DOUBLE_EQ(back.fy, 7.0);
  EXPECT_DOUBLE_EQ(back.cx, 4.0);
  EXPECT_NO_THROW(back.validate());
  // SIMPLE_RADIAL: shared focal, distortion ignored
  const CameraView r2 = m.camera_for(m.images[2]);
  EXPECT_DOUBLE_EQ(r2.fx, 6.0);
  EXPECT_DOUBLE_EQ(r2.fy, 6.0);
  EXPECT_DOUBLE_EQ(r2.cy, 2.9);
}

TEST(Colmap, ErrorsAreTyped) {
  testing_helpers::TempDir dir("colmap_err");
  EXPECT_EQ(kind_of([&] { parse_colmap(dir.path / "nothing"); }), ErrorKind::ingest);

  SparseModel m = small_model();
  write_colmap_text(dir.path / "t", m);
  {
    std::ofstream f(dir.path / "t" / "cameras.txt");
    f << "# camera list\n1 OPENCV_FISHEYE 8 6 1 1 4 3 0 0 0 0\n";
  }
  EXPECT_EQ(kind_of([&] { parse_colmap(dir.path / "t"); }), ErrorKind::unsupported_model);

  write_colmap_text(dir.path / "u", m);
  {
    std::ofstream f(dir.path / "u" / "cameras.txt");
    f << "1 PINHOLE 8 6 7.5 7.0 4.0\n";
  }
  EXPECT_EQ(kind_of([&] { parse_colmap(dir.path / "u"); }), ErrorKind::ingest);

  m.images[0].camera_id = 9;
  write_colmap_text(dir.path / "v", m);
  EXPECT_EQ(kind_of([&] { parse_colmap(dir.path / "v"); }), ErrorKind::ingest);

  write_colmap_binary(dir.path / "w", small_model());
  const fs::path pts = dir.path / "w" / "points3D.bin";
  fs::resize_file(pts, fs::file_size(pts) - 5);
  EXPECT_EQ(kind_of([&] { parse_colmap(dir.path / "w"); }), ErrorKind::format);
}

TEST(Ingest, LoadViewsMatchesMasksByStem) {
  testing_helpers::TempDir dir("views");
  const SparseModel m = small_model();
  fs::create_directories(dir.path / "images");
  fs::create_directories(dir.path / "masks");
  for (std::size_t i = 0; i < m.images.size(); ++i) {
    Image img(8, 6, 3, 0.25 * static_cast<double>(i));
    write_png(dir.path / "images" / m.images[i].name, img);
    Image mask(8, 6, 1, 0.0);
    for (int x = 0; x < 4; ++x) mask.at(x, 2) = 0.8;
    mask.at(5, 5) = 0.3;
    write_png(dir.path / "masks" / ("img_" + std::to_string(i) + ".png"), mask);
  }
  const auto views = load_views(m, dir.path / "images", dir.path / "masks");
  ASSERT_EQ(views.size(), 3u);
  for (const auto& v : views) {
    EXPECT_NO_THROW(v.validate());
    EXPECT_EQ(v.mask.at(0, 2), 1.0);
    EXPECT_EQ(v.mask.at(5, 5), 0.0);
    EXPECT_EQ(v.mask.at(7, 0), 0.0);
  }
  EXPECT_NEAR(views[1].image.at(3, 3, 1), 0.25, 1.0 / 255.0);

  const auto unmasked = load_views(m, dir.path / "images");
  for (const auto& v : unmasked)
    for (double x : v.mask.data) EXPECT_EQ(x, 1.0);

  fs::remove(dir.path / "masks" / "img_1.png");
  EXPECT_EQ(kind_of([&] { load_views(m, dir.path / "images", dir.path / "masks"); }), ErrorKind::ingest);
  write_png(dir.path / "masks" / "img_1.png", Image(4, 4, 1, 1.0));
  EXPECT_EQ(kind_of([&] { load_views(m, dir.path / "images", dir.path / "masks"); }), ErrorKind::ingest);
  write_png(dir.path / "images" / "img_0.png", Image(9, 6, 3, 0.0));
  EXPECT_EQ(kind_of([&] { load_views(m, dir.path / "images"); }), ErrorKind::ingest);
}

TEST(Ingest, BinarizeAtHalf) {
  Image g(3, 1, 1);
  g.data = {0.499, 0.5, 1.0};
  const Image b = binarize_mask(g);
  EXPECT_EQ(b.data, (std::vector<double>{0.0, 1.0, 1.0}));
}

TEST(Ingest, InitSplatsFromPoints) {
  const SparseModel m = small_model();
  const SplatSet s = init_splats(m, 2);
  ASSERT_EQ(s.size(), 5u);
  EXPECT_NO_THROW(s.check_consistent());
  EXPECT_EQ(s.sh_degree, 2);
  // point 0: neighbours at 0.1, 0.2, 0.3
  EXPECT_NEAR(std::exp(s.log_scale[0][0]), 0.2, 1e-12);
  EXPECT_EQ(s.log_scale[0][0], s.log_scale[0][1]);
  for (std::size_t k = 0; k < s.size(); ++k) {
    const DecodedSplat d = decode_splat(s, k);
    EXPECT_NEAR(d.opacity, 0.1, 1e-12);
    EXPECT_EQ(d.normal, Eigen::Vector3d(0, 0, 1));
    EXPECT_EQ(s.position[k], m.points[k]);
    EXPECT_EQ(s.tag[k], m.point_ids[k]);
    const Eigen::Vector3d dc = rgb_to_sh_dc(m.colors[k]);
    for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(s.sh_of(k)[c], dc[c]);
    for (std::size_t c = 3; c < s.sh_of(k).size(); ++c) EXPECT_EQ(s.sh_of(k)[c], 0.0);
  }
  SparseModel empty = m;
  empty.points.clear();
  empty.colors.clear();
  empty.point_ids.clear();
  EXPECT_EQ(kind_of([&] { init_splats(empty); }), ErrorKind::initialization);

  SparseModel single = empty;
  single.points = {{1, 2, 3}};
  single.colors = {{0.5, 0.5, 0.5}};
  single.point_ids = {1};
  const SplatSet one = init_splats(single, 0);
  EXPECT_NEAR(std::exp(one.log_scale[0][0]), 0.01 * scene_extent(single), 1e-12);
}

TEST(SplatIo, RoundTripIsBitExact) {
  testing_helpers::TempDir dir("splat_io");
  for (int degree = 0; degree <= 3; ++degree) {
    const SplatSet s = testing_helpers::random_splats(25, 7 + degree, degree);
    const fs::path p = dir.path / ("s" + std::to_string(degree) + ".ply");
    save_splats(p, s);
    const SplatSet r = load_splats(p);
    ASSERT_EQ(r.size(), s.size());
    EXPECT_EQ(r.sh_degree, degree);
    EXPECT_EQ(r.position, s.position);
    EXPECT_EQ(r.rotation, s.rotation);
    EXPECT_EQ(r.log_scale, s.log_scale);
    EXPECT_EQ(r.opacity_logit, s.opacity_logit);
    EXPECT_EQ(r.sh, s.sh);
  }
  SplatSet empty;
  empty.sh_degree = 1;
  save_splats(dir.path / "empty.ply", empty);
  EXPECT_EQ(load_splats(dir.path / "empty.ply").size(), 0u);
}

TEST(SplatIo, MalformedFilesAreFormatErrors) {
  testing_helpers::TempDir dir("splat_bad");
  {
    std::ofstream f(dir.path / "a.ply", std::ios::binary);
    f << "ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\nend_header\n";
    const float x = 1.0f;
    f.write(reinterpret_cast<const char*>(&x), sizeof x);
  }
  EXPECT_EQ(kind_of([&] { load_splats(dir.path / "a.ply"); }), ErrorKind::format);
  save_splats(dir.path / "b.ply", testing_helpers::random_splats(4, 1));
  fs::resize_file(dir.path / "b.ply", fs::file_size(dir.path / "b.ply") - 3);
  EXPECT_EQ(kind_of([&] { load_splats(dir.path / "b.ply"); }), ErrorKind::format);
  {
    std::ofstream f(dir.path / "c.ply");
    f << "not a ply\n";
  }
  EXPECT_EQ(kind_of([&] { load_splats(dir.path / "c.ply"); }), ErrorKind::format);
}
