#include "ocgs/density_control.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

namespace ocgs {

RowMap RowMap::identity(std::size_t m) {
  RowMap r;
  r.source.resize(m);
  for (std::size_t i = 0; i < m; ++i) r.source[i] = static_cast<std::int64_t>(i);
  return r;
}

RowMap RowMap::from_keep(std::span<const std::uint8_t> keep) {
  RowMap r;
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (keep[i]) r.source.push_back(static_cast<std::int64_t>(i));
  return r;
}

void accumulate_stats(SplatSet& s, const RenderOutput& out, const SplatGradients& g) {
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (!out.contributed[k]) continue;
    s.grad_accum[k] += g.screen[k].norm();
    s.grad_count[k] += 1;
    s.max_radius[k] = std::max(s.max_radius[k], out.radius_px[k]);
    s.seen_since_prune[k] = 1;
  }
}

RowMap densify(SplatSet& s, const TrainConfig& cfg, double extent, std::mt19937_64& rng, ControlCounters* counters) {
  const std::size_t m = s.size();
  const double size_limit = cfg.percent_dense * extent;
  std::vector<std::uint8_t> clone(m, 0), split(m, 0);
  for (std::size_t k = 0; k < m; ++k) {
    const double mean = s.grad_count[k] ? s.grad_accum[k] / s.grad_count[k] : 0.0;
    if (!(mean >= cfg.densify_grad_threshold)) continue;
    const double max_scale = std::exp(s.log_scale[k].maxCoeff());
    (max_scale <= size_limit ? clone : split)[k] = 1;
  }

  RowMap rows;
  std::vector<std::uint8_t> keep(m, 1);
  for (std::size_t k = 0; k < m; ++k)
    if (split[k]) keep[k] = 0;
  for (std::size_t k = 0; k < m; ++k)
    if (keep[k]) rows.source.push_back(static_cast<std::int64_t>(k));

  SplatSet grown = s;
  std::size_t n_clone = 0, n_split = 0;
  for (std::size_t k = 0; k < m; ++k)
    if (clone[k]) grown.push_copy(k), rows.source.push_back(-1), ++n_clone;
  for (std::size_t k = 0; k < m; ++k) {
    if (!split[k]) continue;
    ++n_split;
    const Eigen::Vector4d q = s.rotation[k] / s.rotation[k].norm();
    const Eigen::Matrix3d R = rotation_from_unit_quaternion(q);
    const Eigen::Vector2d scale = s.log_scale[k].array().exp();
    for (int child = 0; child < 2; ++child) {
      std::normal_distribution<double> nu(0.0, scale[0]), nv(0.0, scale[1]);
      const double du = nu(rng), dv = nv(rng);
      grown.push_copy(k);
      const std::size_t c = grown.size() - 1;
      grown.position[c] = s.position[k] + R.col(0) * du + R.col(1) * dv;
      grown.log_scale[c] = (scale / 1.6).array().log();
      rows.source.push_back(-1);
    }
  }
  // Drop split parents: they sit at the front part of `grown`, children are appended.
  std::vector<std::uint8_t> final_keep(grown.size(), 1);
  for (std::size_t k = 0; k < m; ++k) final_keep[k] = keep[k];
  grown.keep(final_keep);
  grown.grad_accum.assign(grown.size(), 0.0);
  grown.grad_count.assign(grown.size(), 0);
  grown.max_radius.assign(grown.size(), 0.0);
  s = std::move(grown);
  if (counters) counters->cloned += n_clone, counters->split += n_split;
  return rows;
}

RowMap prune_transparent(SplatSet& s, const TrainConfig& cfg, double extent, bool prune_big,
                         ControlCounters* counters) {
  const std::size_t m = s.size();
  std::vector<std::uint8_t> keep(m, 1);
  std::size_t removed = 0;
  for (std::size_t k = 0; k < m; ++k) {
    bool drop = sigmoid(s.opacity_logit[k]) < cfg.opacity_prune_threshold;
    if (prune_big) {
      drop = drop || s.max_radius[k] > cfg.max_screen_radius ||
             std::exp(s.log_scale[k].maxCoeff()) > cfg.max_world_scale_ratio * extent;
    }
    if (drop) keep[k] = 0, ++removed;
  }
  s.keep(keep);
  if (counters) counters->pruned += removed;
  return RowMap::from_keep(keep);
}

RowMap prune_occluded(SplatSet& s, ControlCounters* counters) {
  const std::vector<std::uint8_t> seen = s.seen_since_prune;
  const std::size_t before = s.size();
  RowMap rows = prune_unseen(s, std::span<const std::uint8_t>(seen));
  std::fill(s.seen_since_prune.begin(), s.seen_since_prune.end(), 0);
  if (counters) counters->pruned += before - s.size();
  return rows;
}

void reset_opacity(SplatSet& s, double cap) {
  const double cap_logit = logit(cap);
  for (double& l : s.opacity_logit) l = std::min(l, cap_logit);
  std::fill(s.seen_since_prune.begin(), s.seen_since_prune.end(), 0);
}

VisibilityFlags gather_visibility(const SplatSet& s, std::span<const CameraView> cameras, const RenderOptions& opt) {
  VisibilityFlags f{std::vector<std::uint8_t>(s.size(), 0), std::vector<std::uint8_t>(s.size(), 0)};
  for (const CameraView& cam : cameras) {
    const RenderOutput out = render_forward(s, cam, opt);
    for (std::size_t k = 0; k < s.size(); ++k) {
      f.contributed[k] |= out.contributed[k];
      f.in_frustum[k] |= out.in_frustum[k];
    }
  }
  return f;
}

OcclusionReport make_occlusion_report(const VisibilityFlags& f) {
  OcclusionReport r;
  r.total = f.contributed.size();
  for (std::size_t k = 0; k < r.total; ++k) {
    if (f.contributed[k]) continue;
    ++r.occluded;
    r.occluded_indices.push_back(k);
    (f.in_frustum[k] ? r.in_frustum_occluded : r.out_of_frustum) += 1;
  }
  r.ratio = r.total ? static_cast<double>(r.occluded) / static_cast<double>(r.total) : 0.0;
  return r;
}

OcclusionReport post_train_occlusion_prune(SplatSet& s, std::span<const TrainingView> views, const RenderOptions& opt,
                                           RowMap* rows) {
  std::vector<CameraView> cams;
  cams.reserve(views.size());
  for (const auto& v : views) cams.push_back(v.camera);
  const VisibilityFlags flags = gather_visibility(s, cams, opt);
  OcclusionReport report = make_occlusion_report(flags);
  RowMap map = prune_unseen(s, std::span<const std::uint8_t>(flags.contributed));
  if (rows) *rows = std::move(map);
  return report;
}

}  // namespace ocgs
