#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ocgs/scene_model.hpp"

namespace ocgs {

struct ColmapCamera {
  std::uint32_t id = 0;
  std::string model;           // SIMPLE_PINHOLE, PINHOLE or SIMPLE_RADIAL
  int width = 0;
  int height = 0;
  std::vector<double> params;  // model-specific, COLMAP order

  /// Pinhole intrinsics (radial distortion is ignored) with an identity pose.
  CameraView intrinsics() const;
};

struct ImageRecord {
  std::uint32_t id = 0;
  std::uint32_t camera_id = 0;
  Eigen::Vector4d qvec = Eigen::Vector4d(1, 0, 0, 0);  // world-to-camera rotation (w, x, y, z)
  Eigen::Vector3d tvec = Eigen::Vector3d::Zero();
  std::string name;
};

/// Cameras, posed images and the colored sparse point cloud of an SfM reconstruction.
struct SparseModel {
  std::map<std::uint32_t, ColmapCamera> cameras;
  std::vector<ImageRecord> images;  // sorted by name
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> colors;  // [0,1]
  std::vector<std::uint64_t> point_ids;

  CameraView camera_for(const ImageRecord& image) const;
};

/// Reads cameras/images/points3D from `dir` (text `.txt` preferred, else binary `.bin`).
SparseModel parse_colmap(const std::filesystem::path& dir);

void write_colmap_text(const std::filesystem::path& dir, const SparseModel& model);
void write_colmap_binary(const std::filesystem::path& dir, const SparseModel& model);

/// COLMAP model record for a pinhole camera view.
ImageRecord image_record_from_camera(const CameraView& camera, std::uint32_t id, std::uint32_t camera_id,
                                     const std::string& name);

}  // namespace ocgs
