#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "ocgs/colmap.hpp"
#include "ocgs/scene_model.hpp"

namespace ocgs {

/// Loads one TrainingView per image record. Masks are matched by filename stem and
/// binarized at 0.5 on grayscale; without `mask_dir` every mask is all ones.
std::vector<TrainingView> load_views(const SparseModel& model, const std::filesystem::path& image_dir,
                                     const std::optional<std::filesystem::path>& mask_dir = std::nullopt);

/// Binarizes a (gray or color) mask image at 0.5.
Image binarize_mask(const Image& mask);

/// One splat per sparse point: identity rotation, opacity 0.1, isotropic scale equal to
/// the mean distance to the 3 nearest points (0.01 × scene extent when no neighbour
/// exists), degree-0 color from the point color. Tags carry the (truncated) point ids.
SplatSet init_splats(const SparseModel& model, int sh_degree = kMaxShDegree);

/// Extent used by initialization: camera extent when images exist, else point-cloud radius.
double scene_extent(const SparseModel& model);

}  // namespace ocgs
