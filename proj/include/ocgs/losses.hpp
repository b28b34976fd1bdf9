#pragma once

#include <span>

#include "ocgs/config.hpp"
#include "ocgs/image.hpp"
#include "ocgs/rasterizer.hpp"
#include "ocgs/scene_model.hpp"

namespace ocgs {

struct LossBreakdown {
  double total = 0.0;
  double photometric = 0.0;
  double background = 0.0;
  double depth_distortion = 0.0;
  double normal_consistency = 0.0;
};

/// Effective coefficients at one iteration (warm-ups already applied).
struct LossWeights {
  double lambda_dssim = 0.2;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.5;

  static LossWeights at(const TrainConfig& config, int iteration);
};

/// mean(A * (1 - M)). `grad_alpha`, when given, receives (1 - M) / (h w).
double background_loss(const Image& alpha, const Image& mask, Image* grad_alpha = nullptr);

/// (1 - lambda) * L1 + lambda * (1 - SSIM) between image and render.
double photometric_loss(const Image& image, const Image& render, double lambda_dssim, Image* grad_render = nullptr);

/// photometric_loss(I * M, R * M); the gradient is taken through the mask multiply.
double photometric_masked(const Image& image, const Image& render, const Image& mask, double lambda_dssim,
                          Image* grad_render = nullptr);

/// Per-ray distortion sum_{i<j} w_i w_j |z_i - z_j| with optional partials.
double depth_distortion(std::span<const double> weights, std::span<const double> depths,
                        std::span<double> grad_weights = {}, std::span<double> grad_depths = {});

/// Per-ray normal consistency sum_i w_i (1 - n_i . N).
double normal_consistency(std::span<const double> weights, std::span<const Eigen::Vector3d> normals,
                          const Eigen::Vector3d& surface_normal);

/// Normals of the surface P = E * ray from central differences of the expected depth map.
/// `valid` marks interior pixels whose 3×3 cross neighbourhood has alpha > 0.
struct DepthNormals {
  Image normal;  // h × w × 3
  Image valid;   // h × w
};
DepthNormals depth_normals(const Image& expected_depth, const Image& alpha, const CameraView& camera);

/// Image-level normal consistency: mean over pixels of (A - n_render . N) on valid pixels.
/// Writes adjoints for alpha, rendered normal and expected depth when the pointers are set.
double normal_consistency_loss(const RenderOutput& out, const CameraView& camera, Image* g_alpha = nullptr,
                               Image* g_normal = nullptr, Image* g_expected_depth = nullptr);

struct TotalLoss {
  LossBreakdown breakdown;
  PixelAdjoints adjoints;
};

/// Full objective L_c^M + alpha L_d + beta L_n + gamma L_b for one rendered view.
/// The distortion term reads RenderOutput::distortion and is 0 when it was not rendered.
TotalLoss total_loss(const TrainingView& view, const RenderOutput& out, const LossWeights& weights);

}  // namespace ocgs
