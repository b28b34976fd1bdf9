#include "ocgs/metrics.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "ocgs/error.hpp"
#include "ocgs/parallel.hpp"
#include "ocgs/spatial_index.hpp"
#include "ocgs/ssim.hpp"

namespace ocgs {

namespace {

void check_pair(const Image& gt, const Image& r, const Image& m) {
  if (!gt.same_shape(r) || gt.channels != 3) throw Error(ErrorKind::contract, "metric: image shapes differ");
  if (m.width != gt.width || m.height != gt.height || m.channels != 1)
    throw Error(ErrorKind::contract, "metric: mask shape differs from image");
}

double mask_sum(const Image& m) {
  double s = 0.0;
  for (double v : m.data) s += v;
  if (!(s > 0.0)) throw Error(ErrorKind::undefined_metric, "metric undefined for an empty mask");
  return s;
}

}  // namespace

double masked_psnr(const Image& gt, const Image& r, const Image& m) {
  check_pair(gt, r, m);
  const double msum = mask_sum(m);
  double se = 0.0;
  for (std::size_t p = 0; p < m.pixel_count(); ++p) {
    if (m.data[p] == 0.0) continue;
    double e = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double d = (gt.data[3 * p + c] - r.data[3 * p + c]) * m.data[p];
      e += d * d;
    }
    se += e / 3.0;
  }
  const double mse = se / msum;
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

double psnr(const Image& gt, const Image& r) {
  return masked_psnr(gt, r, Image(gt.width, gt.height, 1, 1.0));
}

double masked_ssim(const Image& gt, const Image& r, const Image& m) {
  check_pair(gt, r, m);
  const double msum = mask_sum(m);
  Image a = gt, b = r;
  for (std::size_t p = 0; p < m.pixel_count(); ++p)
    for (int c = 0; c < 3; ++c) a.data[3 * p + c] *= m.data[p], b.data[3 * p + c] *= m.data[p];
  const Image s = ssim_map(a, b);
  double acc = 0.0;
  for (std::size_t p = 0; p < m.pixel_count(); ++p)
    if (m.data[p] != 0.0) acc += (s.data[3 * p] + s.data[3 * p + 1] + s.data[3 * p + 2]) / 3.0;
  return acc / msum;
}

double chamfer_distance(std::span<const Eigen::Vector3d> a, std::span<const Eigen::Vector3d> b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::undefined_metric, "chamfer distance of an empty point set");
  auto directed = [](std::span<const Eigen::Vector3d> from, std::span<const Eigen::Vector3d> to) {
    const PointGrid grid(to);
    std::vector<double> d(from.size());
    parallel_for(from.size(), [&](std::size_t i) { d[i] = grid.nearest_distance(from[i]); });
    double s = 0.0;
    for (double x : d) s += x;
    return s / static_cast<double>(from.size());
  };
  return 0.5 * (directed(a, b) + directed(b, a));
}

double chamfer_distance(const TriangleMesh& mesh, std::span<const Eigen::Vector3d> points, std::size_t samples,
                        std::uint64_t seed) {
  const auto pts = sample_surface(mesh, samples, seed);
  return chamfer_distance(pts, points);
}

OcclusionReport occlusion_census(const SplatSet& splats, std::span<const TrainingView> views,
                                 const RenderOptions& options) {
  std::vector<CameraView> cams;
  cams.reserve(views.size());
  for (const auto& v : views) cams.push_back(v.camera);
  return make_occlusion_report(gather_visibility(splats, cams, options));
}

std::string census_record(const OcclusionReport& r) {
  nlohmann::json j;
  j["total"] = r.total;
  j["occluded"] = r.occluded;
  j["ratio"] = r.ratio;
  j["in_frustum_occluded"] = r.in_frustum_occluded;
  j["out_of_frustum"] = r.out_of_frustum;
  j["occluded_indices"] = r.occluded_indices;
  return j.dump();
}

Image occlusion_heatmap(const SplatSet& splats, const OcclusionReport& report, const TrainingView& view) {
  const CameraView& cam = view.camera;
  Image img(cam.width, cam.height, 3, 0.0);
  if (view.image.same_shape(img))
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = 0.35 * view.image.data[i];
  const int r = std::max(1, cam.width / 128);
  for (std::size_t k : report.occluded_indices) {
    const Eigen::Vector3d pc = cam.rotation() * splats.position[k] + cam.translation();
    if (!(pc.z() > 0.0)) continue;
    const int u = static_cast<int>(std::floor(cam.fx * pc.x() / pc.z() + cam.cx));
    const int v = static_cast<int>(std::floor(cam.fy * pc.y() / pc.z() + cam.cy));
    for (int y = v - r; y <= v + r; ++y)
      for (int x = u - r; x <= u + r; ++x) {
        if (x < 0 || y < 0 || x >= cam.width || y >= cam.height) continue;
        img.at(x, y, 0) = std::min(1.0, img.at(x, y, 0) + 0.5);
        img.at(x, y, 1) *= 0.5;
        img.at(x, y, 2) *= 0.5;
      }
  }
  return img;
}

void write_occlusion_heatmaps(const std::filesystem::path& dir, const SplatSet& splats, const OcclusionReport& report,
                              std::span<const TrainingView> views) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < views.size(); ++i) {
    char name[48];
    std::snprintf(name, sizeof name, "heatmap_%03zu.png", i);
    write_png(dir / name, occlusion_heatmap(splats, report, views[i]));
  }
}

}  // namespace ocgs
