#pragma once

#include <filesystem>
#include <vector>

#include "ocgs/colmap.hpp"
#include "ocgs/scene_model.hpp"

namespace ocgs {

/// Checkerboard-textured sphere at the origin seen from camera rings (z is up).
struct SphereSceneParams {
  double radius = 1.0;
  int n_views = 16;
  int width = 64;
  int height = 64;
  double fov_x = 0.9;
  double camera_distance = 3.5;
  std::vector<double> elevations = {-0.4, 0.0, 0.4};  // radians, cycled over the views
  int checker_lon = 8;
  int checker_lat = 6;
  bool with_background = true;  // textured dome around everything
  double background_radius = 6.0;
  double background_max_lat = 0.9;  // background points are seeded in |lat| <= this
  int n_object_points = 300;
  int n_background_points = 600;
  double point_noise = 0.01;  // relative to radius
  int n_surface_samples = 20000;
  int sh_degree = kMaxShDegree;
  std::uint64_t seed = 0;
};

struct SphereScene {
  SphereSceneParams params;
  std::vector<TrainingView> views;
  SparseModel model;  // cameras, poses and the seeded "SfM" points
  SplatSet init;      // init_splats(model)
  std::vector<Eigen::Vector3d> surface_points;  // uniform samples of the analytic sphere

  /// Object points carry ids 1..n_object_points, background points the ids after them.
  bool is_background(std::uint32_t tag) const { return tag > static_cast<std::uint32_t>(params.n_object_points); }
  std::size_t count_background(const SplatSet& s) const;
};

SphereScene make_sphere_scene(const SphereSceneParams& params = {});

/// The camera ring used by make_sphere_scene.
std::vector<CameraView> sphere_scene_cameras(const SphereSceneParams& params);

/// Opaque wall of splats (large stacked discs plus texture splats) in front of `n_hidden` planted splats that are inside every
/// frustum, plus optional splats behind all cameras.
struct OccluderSceneParams {
  int n_hidden = 5;
  int n_out_of_frustum = 0;
  int n_views = 4;
  int width = 48;
  int height = 48;
  double fov_x = 0.8;
  std::uint64_t seed = 0;
};

struct OccluderScene {
  SplatSet splats;
  std::vector<TrainingView> views;  // images rendered from `splats`, masks all ones
  std::vector<std::size_t> hidden_indices;
  std::vector<std::size_t> out_of_frustum_indices;
};

OccluderScene make_occluder_scene(const OccluderSceneParams& params = {});

enum class MaskDefect { erode, dilate };

/// Sphere scene whose masks carry defects: disc patches carved out of (erode) or added
/// around (dilate) the silhouette in a fraction of the views, and optionally a hole over
/// the polar cap z > hole_height · radius in every view.
struct ErroneousMaskParams {
  SphereSceneParams base = [] {
    SphereSceneParams p;
    p.n_views = 20;
    p.elevations = {-0.17, 0.17};
    return p;
  }();
  double defect_fraction = 0.1;
  MaskDefect kind = MaskDefect::erode;
  int patch_radius_px = 7;
  bool consistent_hole = false;
  double hole_height = 0.7;
};

struct ErroneousMaskScene {
  SphereScene scene;                      // views carry the defective masks
  std::vector<Image> clean_masks;
  std::vector<Image> defect_maps;         // 1 where the mask differs from the clean one
  std::vector<int> defective_views;       // views with a patch defect
};

ErroneousMaskScene make_erroneous_mask_scene(const ErroneousMaskParams& params = {});

/// Writes DIR/images/*.png, DIR/masks/*.png and a text model in DIR/sparse/0.
void write_dataset(const std::filesystem::path& dir, std::span<const TrainingView> views, const SparseModel& model);

/// Pinhole model for a set of views (one shared camera when intrinsics agree).
SparseModel sparse_model_for(std::span<const TrainingView> views);

}  // namespace ocgs
