#pragma once

#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ocgs/density_control.hpp"
#include "ocgs/image.hpp"
#include "ocgs/mesher.hpp"

namespace ocgs {

/// PSNR in dB with MAX = 1 over pixels with M = 1; squared error is averaged over the three
/// channels. Identical images give +infinity. Empty mask: undefined_metric error.
double masked_psnr(const Image& gt, const Image& render, const Image& mask);
double psnr(const Image& gt, const Image& render);

/// SSIM of (gt·M, render·M), averaged over channels and over pixels with M = 1.
double masked_ssim(const Image& gt, const Image& render, const Image& mask);

/// Mean of the two directed mean nearest-neighbour distances.
double chamfer_distance(std::span<const Eigen::Vector3d> a, std::span<const Eigen::Vector3d> b);
/// Mesh against points: the mesh is surface-sampled with `samples` points first.
double chamfer_distance(const TriangleMesh& mesh, std::span<const Eigen::Vector3d> points, std::size_t samples,
                        std::uint64_t seed = 0);

/// Renders every view and reports splats that never entered blending. Pure.
OcclusionReport occlusion_census(const SplatSet& splats, std::span<const TrainingView> views,
                                 const RenderOptions& options = {});

/// One-line JSON record with stable field names.
std::string census_record(const OcclusionReport& report);

/// Dimmed ground-truth image with occluded splat centers drawn as red dots.
Image occlusion_heatmap(const SplatSet& splats, const OcclusionReport& report, const TrainingView& view);
/// Writes one heatmap PNG per view into `dir` (heatmap_000.png, ...).
void write_occlusion_heatmaps(const std::filesystem::path& dir, const SplatSet& splats, const OcclusionReport& report,
                              std::span<const TrainingView> views);

}  // namespace ocgs
