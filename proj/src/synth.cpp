#include "ocgs/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "ocgs/error.hpp"
#include "ocgs/ingest.hpp"
#include "ocgs/rasterizer.hpp"
#include "ocgs/sh.hpp"

namespace ocgs {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Vector3d checker(const Eigen::Vector3d& dir, int n_lon, int n_lat, const Eigen::Vector3d& a,
                        const Eigen::Vector3d& b) {
  const Eigen::Vector3d d = dir.normalized();
  const double lon = std::atan2(d.y(), d.x()) + kPi;  // [0, 2pi]
  const double lat = std::asin(std::clamp(d.z(), -1.0, 1.0)) + 0.5 * kPi;  // [0, pi]
  const int i = std::min(n_lon - 1, static_cast<int>(lon / (2 * kPi) * n_lon));
  const int j = std::min(n_lat - 1, static_cast<int>(lat / kPi * n_lat));
  return (i + j) % 2 ? a : b;
}

const Eigen::Vector3d kObjA(0.85, 0.3, 0.2), kObjB(0.25, 0.4, 0.85);
const Eigen::Vector3d kBgA(0.9, 0.85, 0.45), kBgB(0.15, 0.5, 0.3);

// Nearest positive root of |o + t d|^2 = r^2, or -1.
double ray_sphere(const Eigen::Vector3d& o, const Eigen::Vector3d& d, double r) {
  const double b = o.dot(d), c = o.squaredNorm() - r * r;
  const double disc = b * b - c;
  if (disc < 0.0) return -1.0;
  const double s = std::sqrt(disc);
  if (-b - s > 0.0) return -b - s;
  if (-b + s > 0.0) return -b + s;
  return -1.0;
}

Eigen::Vector3d uniform_on_sphere(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v;
  do v = {n(rng), n(rng), n(rng)};
  while (v.norm() < 1e-9);
  return v.normalized();
}

}  // namespace

std::size_t SphereScene::count_background(const SplatSet& s) const {
  std::size_t n = 0;
  for (auto t : s.tag) n += is_background(t);
  return n;
}

std::vector<CameraView> sphere_scene_cameras(const SphereSceneParams& p) {
  if (p.n_views < 2) throw Error(ErrorKind::contract, "sphere scene needs at least 2 views");
  if (p.elevations.empty()) throw Error(ErrorKind::contract, "sphere scene needs at least one elevation");
  std::vector<CameraView> cams;
  for (int i = 0; i < p.n_views; ++i) {
    const double az = 2.0 * kPi * i / p.n_views;
    const double el = p.elevations[i % p.elevations.size()];
    const Eigen::Vector3d eye =
        p.camera_distance * Eigen::Vector3d(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    cams.push_back(CameraView::look_at(eye, Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(), p.width, p.height,
                                       p.fov_x));
  }
  return cams;
}

SparseModel sparse_model_for(std::span<const TrainingView> views) {
  SparseModel m;
  std::map<std::tuple<int, int, double, double, double, double>, std::uint32_t> ids;
  for (const TrainingView& v : views) {
    const CameraView& c = v.camera;
    const auto key = std::make_tuple(c.width, c.height, c.fx, c.fy, c.cx, c.cy);
    auto it = ids.find(key);
    if (it == ids.end()) {
      const auto id = static_cast<std::uint32_t>(ids.size() + 1);
      it = ids.emplace(key, id).first;
      m.cameras[id] = ColmapCamera{id, "PINHOLE", c.width, c.height, {c.fx, c.fy, c.cx, c.cy}};
    }
    m.images.push_back(image_record_from_camera(c, static_cast<std::uint32_t>(m.images.size() + 1), it->second,
                                                v.name));
  }
  std::sort(m.images.begin(), m.images.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return m;
}

SphereScene make_sphere_scene(const SphereSceneParams& p) {
  SphereScene s;
  s.params = p;
  const auto cams = sphere_scene_cameras(p);
  s.views.resize(cams.size());
  for (std::size_t i = 0; i < cams.size(); ++i) {
    TrainingView& v = s.views[i];
    v.camera = cams[i];
    v.index = static_cast<int>(i);
    char name[32];
    std::snprintf(name, sizeof name, "view_%03zu.png", i);
    v.name = name;
    v.image = Image(p.width, p.height, 3, 0.0);
    v.mask = Image(p.width, p.height, 1, 0.0);
    const Eigen::Matrix3d Rt = v.camera.rotation().transpose();
    const Eigen::Vector3d o = v.camera.center();
    for (int y = 0; y < p.height; ++y)
      for (int x = 0; x < p.width; ++x) {
        const Eigen::Vector3d d = (Rt * v.camera.pixel_ray(x, y)).normalized();
        Eigen::Vector3d rgb = Eigen::Vector3d::Zero();
        const double t = ray_sphere(o, d, p.radius);
        if (t > 0.0) {
          rgb = checker(o + t * d, p.checker_lon, p.checker_lat, kObjA, kObjB);
          v.mask.at(x, y) = 1.0;
        } else if (p.with_background) {
          const double tb = ray_sphere(o, d, p.background_radius);
          if (tb > 0.0) rgb = checker(o + tb * d, 4 * p.checker_lon, 3 * p.checker_lat, kBgA, kBgB);
        }
        for (int c = 0; c < 3; ++c) v.image.at(x, y, c) = rgb[c];
      }
  }

  s.model = sparse_model_for(s.views);
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> noise(0.0, p.point_noise * p.radius);
  std::uint64_t id = 1;
  for (int i = 0; i < p.n_object_points; ++i) {
    const Eigen::Vector3d n = uniform_on_sphere(rng);
    s.model.points.push_back(p.radius * n + Eigen::Vector3d(noise(rng), noise(rng), noise(rng)));
    s.model.colors.push_back(checker(n, p.checker_lon, p.checker_lat, kObjA, kObjB));
    s.model.point_ids.push_back(id++);
  }
  if (p.with_background) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double zmax = std::sin(p.background_max_lat);
    // a structure-from-motion point has to be seen unobstructed from at least two views
    auto triangulable = [&](const Eigen::Vector3d& x) {
      int seen = 0;
      for (const auto& v : s.views) {
        const Eigen::Vector3d c = v.camera.rotation() * x + v.camera.translation();
        if (c.z() <= 0.0) continue;
        const double u = v.camera.fx * c.x() / c.z() + v.camera.cx, w = v.camera.fy * c.y() / c.z() + v.camera.cy;
        if (u < 0.0 || w < 0.0 || u >= v.camera.width || w >= v.camera.height) continue;
        const Eigen::Vector3d o = v.camera.center(), d = (x - o).normalized();
        const double t = ray_sphere(o, d, p.radius);
        if (t > 0.0 && t < (x - o).norm()) continue;
        if (++seen >= 2) return true;
      }
      return false;
    };
    long attempts = 0;
    for (int i = 0; i < p.n_background_points; ++i) {
      Eigen::Vector3d n;
      do {
        if (++attempts > 1000L * p.n_background_points + 1000)
          throw Error(ErrorKind::contract, "sphere scene: background dome is not visible from the cameras");
        const double z = (2.0 * U(rng) - 1.0) * zmax, phi = 2.0 * kPi * U(rng);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        n = Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z);
      } while (!triangulable(p.background_radius * n));
      s.model.points.push_back(p.background_radius * n);
      s.model.colors.push_back(checker(n, 4 * p.checker_lon, 3 * p.checker_lat, kBgA, kBgB));
      s.model.point_ids.push_back(id++);
    }
  }
  s.init = init_splats(s.model, p.sh_degree);

  s.surface_points.reserve(p.n_surface_samples);
  for (int i = 0; i < p.n_surface_samples; ++i) s.surface_points.push_back(p.radius * uniform_on_sphere(rng));
  return s;
}

OccluderScene make_occluder_scene(const OccluderSceneParams& p) {
  if (p.n_hidden < 0 || p.n_out_of_frustum < 0 || p.n_views < 1)
    throw Error(ErrorKind::contract, "occluder scene: counts must be non-negative");
  OccluderScene out;
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);

  std::vector<CameraView> cams;
  const int side = static_cast<int>(std::ceil(std::sqrt(p.n_views)));
  for (int i = 0; i < p.n_views; ++i) {
    const double ox = side > 1 ? -0.4 + 0.8 * (i % side) / (side - 1) : 0.0;
    const double oy = side > 1 ? -0.4 + 0.8 * (i / side) / std::max(1, side - 1) : 0.0;
    const Eigen::Vector3d eye(ox, oy, -4.0);
    cams.push_back(CameraView::look_at(eye, eye + Eigen::Vector3d::UnitZ(), -Eigen::Vector3d::UnitY(), p.width,
                                       p.height, p.fov_x));
  }
  struct Proto {
    Eigen::Vector3d pos;
    Eigen::Vector4d rot;
    Eigen::Vector2d log_scale;
    double opacity;  // logit
    Eigen::Vector3d color;
    int kind;  // 0 wall, 1 hidden, 2 out of frustum
  };
  std::vector<Proto> protos;
  // Three large opaque discs (transmittance behind them ~1e-7 everywhere in view) with
  // semi-transparent texture splats in front; every one of these blends somewhere.
  for (int layer = 0; layer < 3; ++layer) {
    const Eigen::Vector3d col(0.3 + 0.2 * layer, 0.5, 0.7 - 0.2 * layer);
    protos.push_back({Eigen::Vector3d(0.0, 0.0, 0.05 * layer), {1, 0, 0, 0}, Eigen::Vector2d::Constant(std::log(20.0)),
                      logit(0.9999), col, 0});
  }
  for (int i = 0; i < 150; ++i) {
    const Eigen::Vector3d pos(-1.5 + 3.0 * U(rng), -1.5 + 3.0 * U(rng), -0.5 + 0.4 * U(rng));
    const Eigen::Vector3d col(0.2 + 0.6 * U(rng), 0.2 + 0.6 * U(rng), 0.2 + 0.6 * U(rng));
    protos.push_back({pos, {1, 0, 0, 0}, Eigen::Vector2d::Constant(std::log(0.08 + 0.05 * U(rng))), logit(0.5), col, 0});
  }
  for (int h = 0; h < p.n_hidden; ++h) {
    const Eigen::Vector3d pos(-0.6 + 1.2 * U(rng), -0.6 + 1.2 * U(rng), 0.5 + U(rng));
    Eigen::Vector4d q(U(rng) - 0.5, U(rng) - 0.5, U(rng) - 0.5, U(rng) - 0.5);
    q = q.normalized();
    const Eigen::Vector2d ls(std::log(0.03 + 0.03 * U(rng)), std::log(0.03 + 0.03 * U(rng)));
    protos.push_back({pos, q, ls, logit(0.8), Eigen::Vector3d(0.9, 0.1, 0.1), 1});
  }
  for (int h = 0; h < p.n_out_of_frustum; ++h) {
    const Eigen::Vector3d pos(-1.0 + 2.0 * U(rng), -1.0 + 2.0 * U(rng), -8.0 - U(rng));
    protos.push_back({pos, {1, 0, 0, 0}, Eigen::Vector2d::Constant(std::log(0.05)), logit(0.8),
                      Eigen::Vector3d(0.1, 0.9, 0.1), 2});
  }
  std::shuffle(protos.begin(), protos.end(), rng);

  out.splats.sh_degree = 0;
  for (std::size_t k = 0; k < protos.size(); ++k) {
    const Proto& pr = protos[k];
    const Eigen::Vector3d dc3 = rgb_to_sh_dc(pr.color);
    const double dc[3] = {dc3[0], dc3[1], dc3[2]};
    out.splats.push_back(pr.pos, pr.rot, pr.log_scale, pr.opacity, dc,
                         static_cast<std::uint32_t>(k));
    if (pr.kind == 1) out.hidden_indices.push_back(k);
    if (pr.kind == 2) out.out_of_frustum_indices.push_back(k);
  }

  for (int i = 0; i < p.n_views; ++i) {
    TrainingView v;
    v.camera = cams[i];
    v.index = i;
    char name[32];
    std::snprintf(name, sizeof name, "view_%03d.png", i);
    v.name = name;
    v.image = render_forward(out.splats, v.camera).color;
    v.mask = Image(p.width, p.height, 1, 1.0);
    out.views.push_back(std::move(v));
  }
  return out;
}

ErroneousMaskScene make_erroneous_mask_scene(const ErroneousMaskParams& p) {
  ErroneousMaskScene out;
  out.scene = make_sphere_scene(p.base);
  auto& views = out.scene.views;
  const int W = p.base.width, H = p.base.height, r = p.patch_radius_px;
  for (const auto& v : views) {
    out.clean_masks.push_back(v.mask);
    out.defect_maps.emplace_back(W, H, 1, 0.0);
  }

  if (p.consistent_hole) {
    const double zc = p.hole_height * p.base.radius;
    for (std::size_t i = 0; i < views.size(); ++i) {
      TrainingView& v = views[i];
      const Eigen::Matrix3d Rt = v.camera.rotation().transpose();
      const Eigen::Vector3d o = v.camera.center();
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          const Eigen::Vector3d d = (Rt * v.camera.pixel_ray(x, y)).normalized();
          const double t = ray_sphere(o, d, p.base.radius);
          if (t > 0.0 && (o + t * d).z() > zc && v.mask.at(x, y) == 1.0) {
            v.mask.at(x, y) = 0.0;
            out.defect_maps[i].at(x, y) = 1.0;
          }
        }
    }
  }

  std::mt19937_64 rng(p.base.seed ^ 0x9e3779b97f4a7c15ull);
  const int n_def = static_cast<int>(std::lround(p.defect_fraction * static_cast<double>(views.size())));
  std::vector<int> order(views.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(std::clamp<std::size_t>(n_def, 0, order.size()));
  std::sort(order.begin(), order.end());

  for (int vi : order) {
    TrainingView& v = views[vi];
    const Image& clean = out.clean_masks[vi];
    // Candidate centers: a full disc inside the silhouette (erode) or on its rim (dilate).
    std::vector<std::pair<int, int>> cand;
    for (int y = r; y < H - r; ++y)
      for (int x = r; x < W - r; ++x) {
        if (p.kind == MaskDefect::erode) {
          bool inside = true;
          for (int dy = -r; dy <= r && inside; ++dy)
            for (int dx = -r; dx <= r && inside; ++dx)
              if (dx * dx + dy * dy <= r * r && clean.at(x + dx, y + dy) == 0.0) inside = false;
          if (inside) cand.emplace_back(x, y);
        } else if (clean.at(x, y) == 1.0 &&
                   (clean.at(x - 1, y) == 0.0 || clean.at(x + 1, y) == 0.0 || clean.at(x, y - 1) == 0.0 ||
                    clean.at(x, y + 1) == 0.0)) {
          cand.emplace_back(x, y);
        }
      }
    if (cand.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, cand.size() - 1);
    const auto [cx, cy] = cand[pick(rng)];
    const double value = p.kind == MaskDefect::erode ? 0.0 : 1.0;
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) {
        if (dx * dx + dy * dy > r * r) continue;
        const int x = cx + dx, y = cy + dy;
        if (x < 0 || y < 0 || x >= W || y >= H || v.mask.at(x, y) == value) continue;
        v.mask.at(x, y) = value;
        out.defect_maps[vi].at(x, y) = 1.0;
      }
    out.defective_views.push_back(vi);
  }
  return out;
}

void write_dataset(const fs::path& dir, std::span<const TrainingView> views, const SparseModel& model) {
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  fs::create_directories(dir / "sparse" / "0");
  for (const TrainingView& v : views) {
    write_png(dir / "images" / v.name, v.image);
    write_png(dir / "masks" / (fs::path(v.name).stem().string() + ".png"), v.mask);
  }
  write_colmap_text(dir / "sparse" / "0", model);
}

}  // namespace ocgs
