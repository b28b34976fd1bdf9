#include "ocgs/ingest.hpp"

#include <cmath>

#include "ocgs/error.hpp"
#include "ocgs/parallel.hpp"
#include "ocgs/sh.hpp"
#include "ocgs/spatial_index.hpp"

namespace ocgs {

namespace fs = std::filesystem;

namespace {

std::optional<fs::path> find_mask(const fs::path& dir, const std::string& image_name) {
  const fs::path name(image_name);
  const std::string stem = name.stem().string();
  for (const fs::path& p : {dir / (stem + ".png"), dir / (name.filename().string() + ".png")})
    if (fs::exists(p)) return p;
  if (fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().stem().string() == stem) return e.path();
  return std::nullopt;
}

}  // namespace

Image binarize_mask(const Image& mask) {
  const Image gray = to_gray(mask);
  Image out(gray.width, gray.height, 1);
  for (std::size_t i = 0; i < gray.data.size(); ++i) out.data[i] = gray.data[i] >= 0.5 ? 1.0 : 0.0;
  return out;
}

std::vector<TrainingView> load_views(const SparseModel& model, const fs::path& image_dir,
                                     const std::optional<fs::path>& mask_dir) {
  std::vector<TrainingView> views(model.images.size());
  parallel_for(views.size(), [&](std::size_t i) {
    const ImageRecord& r = model.images[i];
    TrainingView& v = views[i];
    v.index = static_cast<int>(i);
    v.name = r.name;
    v.camera = model.camera_for(r);
    const fs::path img_path = image_dir / r.name;
    if (!fs::exists(img_path)) throw Error(ErrorKind::ingest, "missing image file: " + img_path.string());
    Image img = read_png(img_path);
    if (img.channels == 1) {
      Image rgb(img.width, img.height, 3);
      for (std::size_t p = 0; p < img.pixel_count(); ++p)
        for (int c = 0; c < 3; ++c) rgb.data[p * 3 + c] = img.data[p];
      img = std::move(rgb);
    }
    v.image = std::move(img);
    if (v.image.width != v.camera.width || v.image.height != v.camera.height)
      throw Error(ErrorKind::ingest, "view " + std::to_string(i) + " (" + r.name + "): image size " +
                                         std::to_string(v.image.width) + "x" + std::to_string(v.image.height) +
                                         " does not match camera");
    if (mask_dir) {
      const auto mp = find_mask(*mask_dir, r.name);
      if (!mp) throw Error(ErrorKind::ingest, "view " + std::to_string(i) + ": no mask for " + r.name);
      v.mask = binarize_mask(read_png(*mp));
      if (v.mask.width != v.camera.width || v.mask.height != v.camera.height)
        throw Error(ErrorKind::ingest, "view " + std::to_string(i) + " (" + r.name + "): mask size mismatch");
    } else {
      v.mask = Image(v.camera.width, v.camera.height, 1, 1.0);
    }
  });
  return views;
}

double scene_extent(const SparseModel& model) {
  if (!model.images.empty()) {
    std::vector<CameraView> cams;
    for (const auto& r : model.images) cams.push_back(model.camera_for(r));
    return camera_extent(cams);
  }
  if (model.points.empty()) return 1.0;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : model.points) mean += p;
  mean /= static_cast<double>(model.points.size());
  double r = 0.0;
  for (const auto& p : model.points) r = std::max(r, (p - mean).norm());
  return r > 0.0 ? 1.1 * r : 1.0;
}

SplatSet init_splats(const SparseModel& model, int sh_degree) {
  const std::size_t n = model.points.size();
  if (n == 0) throw Error(ErrorKind::initialization, "cannot initialize splats from an empty point cloud");
  SplatSet s;
  s.sh_degree = sh_degree;
  const double fallback = 0.01 * scene_extent(model);
  const PointGrid grid(model.points);
  std::vector<double> sh(static_cast<std::size_t>(s.coeffs()) * 3, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nn = grid.knn(model.points[i], 3, i);
    double mean = 0.0;
    for (std::size_t j : nn) mean += (model.points[j] - model.points[i]).norm();
    double scale = nn.empty() ? 0.0 : mean / static_cast<double>(nn.size());
    if (!(scale > 0.0)) scale = fallback;
    const Eigen::Vector3d dc = rgb_to_sh_dc(model.colors[i]);
    for (int c = 0; c < 3; ++c) sh[c] = dc[c];
    const auto tag = static_cast<std::uint32_t>(i < model.point_ids.size() ? model.point_ids[i] : i);
    s.push_back(model.points[i], {1, 0, 0, 0}, Eigen::Vector2d::Constant(std::log(scale)), logit(0.1), sh, tag);
  }
  return s;
}

}  // namespace ocgs
