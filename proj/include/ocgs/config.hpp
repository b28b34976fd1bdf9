#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace ocgs {

/// Blending constants shared by the forward and backward rasterizer.
struct RenderSettings {
  double alpha_termination_threshold = 0.9999;  // stop once transmittance < 1 - threshold
  double min_splat_alpha = 1.0 / 255.0;
  double alpha_clip = 0.999;
  double cutoff_sigma = 3.0;        // footprint radius in units of the disc's std-dev
  double lowpass_inv_square = 2.0;  // screen-space low-pass: rho = inv_sq * |pixel - center|^2
  double near_plane = 0.01;
  int tile_size = 16;
  // Depth mapping used inside the distortion regularizer (ray depth -> [0,1) NDC-like).
  double distortion_near = 0.2;
  double distortion_far = 100.0;
};

/// Every schedule constant, loss weight and learning rate of a training run.
/// Zero-valued "auto" fields are resolved by `resolved()` once the view count is known.
struct TrainConfig {
  int iterations = 30000;
  std::uint64_t seed = 0;
  bool deterministic = true;  // reductions are always ordered; kept for interface compatibility
  int threads = 0;

  // Loss weights. alpha/beta multiply the regularizers once their warm-up has passed.
  double alpha_coeff = 1000.0;
  double beta_coeff = 0.05;
  double gamma_coeff = 0.5;
  double lambda_dssim = 0.2;
  int distortion_from_iter = 3000;
  int normal_from_iter = 7000;

  // Ablation switches.
  bool use_masks = true;
  bool occlusion_prune = true;

  int occlusion_prune_interval = 0;  // 0: 100 for <= 64 views, otherwise 600
  int densify_from_iter = 500;
  int densify_interval = 100;
  int densify_until_iter = 0;  // 0: iterations / 2
  double densify_grad_threshold = 2e-4;
  double percent_dense = 0.01;
  int opacity_reset_interval = 3000;
  double opacity_prune_threshold = 0.005;
  double max_screen_radius = 20.0;
  double max_world_scale_ratio = 0.1;

  int sh_degree_max = 3;
  int sh_upgrade_interval = 1000;

  double lr_position_init = 1.6e-4;
  double lr_position_final = 1.6e-6;
  double lr_sh_dc = 2.5e-3;
  double lr_sh_rest = 1.25e-4;
  double lr_opacity = 5e-2;
  double lr_scale = 5e-3;
  double lr_rotation = 1e-3;

  double alpha_termination_threshold = 0.9999;
  double min_splat_alpha = 1.0 / 255.0;
  Eigen::Vector3d background = Eigen::Vector3d::Zero();

  /// Copy with auto fields filled in for `n_views` training views.
  TrainConfig resolved(std::size_t n_views) const;

  /// Throws ErrorKind::config when an interval is < 1, gamma < 0, or a threshold leaves (0,1).
  void validate() const;

  RenderSettings render_settings() const;

  /// Flat `key = value` view of every field (stable key names, used for config files).
  std::map<std::string, std::string> to_map() const;

  /// Applies a single `key = value` assignment; unknown keys raise ErrorKind::config.
  void set(const std::string& key, const std::string& value);
};

/// Parses a flat key-value file: one `key = value` per line, `#` starts a comment.
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});
void save_config(const std::filesystem::path& path, const TrainConfig& config);

}  // namespace ocgs
