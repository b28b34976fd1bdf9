#pragma once

#include <concepts>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ocgs/config.hpp"
#include "ocgs/rasterizer.hpp"
#include "ocgs/scene_model.hpp"

namespace ocgs {

/// Provenance of every row after a population rewrite: source[i] is the pre-rewrite row
/// that row i continues, or -1 for a newly created splat (fresh optimizer moments).
struct RowMap {
  std::vector<std::int64_t> source;

  static RowMap identity(std::size_t m);
  static RowMap from_keep(std::span<const std::uint8_t> keep);
};

struct ControlCounters {
  std::size_t cloned = 0;
  std::size_t split = 0;  // parents replaced by two children each
  std::size_t pruned = 0;
};

/// Adds the screen-space positional gradient norm of every contributing splat, bumps its
/// counter and screen radius maximum, and ORs contributed into seen_since_prune.
void accumulate_stats(SplatSet& splats, const RenderOutput& output, const SplatGradients& grads);

/// Clone small and split large splats whose mean accumulated gradient exceeds the
/// threshold. Resulting order: surviving originals, clones, split children.
RowMap densify(SplatSet& splats, const TrainConfig& config, double scene_extent, std::mt19937_64& rng,
               ControlCounters* counters = nullptr);

/// Removes splats with opacity below the threshold, and, when `prune_big` is set, splats
/// whose screen radius or world scale exceeds the configured sanity bounds.
RowMap prune_transparent(SplatSet& splats, const TrainConfig& config, double scene_extent, bool prune_big,
                         ControlCounters* counters = nullptr);

/// Any population that can drop rows by mask; the occlusion pruner needs nothing else,
/// so it is independent of what the rows represent.
template <typename P>
concept Prunable = requires(P& p, std::span<const std::uint8_t> keep) {
  { p.size() } -> std::convertible_to<std::size_t>;
  p.keep(keep);
};

/// Keeps exactly the rows flagged as having contributed to some rendered pixel.
template <Prunable P>
RowMap prune_unseen(P& population, std::span<const std::uint8_t> contributed) {
  std::vector<std::uint8_t> keep(contributed.begin(), contributed.end());
  for (auto& k : keep) k = k ? 1 : 0;
  population.keep(keep);
  return RowMap::from_keep(keep);
}

/// Occlusion-aware pruning: drops splats whose seen_since_prune flag is false and clears
/// the flags of the survivors to start the next observation window.
RowMap prune_occluded(SplatSet& splats, ControlCounters* counters = nullptr);

/// Caps every opacity at `cap` (logits below the cap are left untouched) and clears the
/// seen flags so splats dimmed by the reset are observed afresh.
void reset_opacity(SplatSet& splats, double cap = 0.01);

/// OR-reduced flags over a set of cameras.
struct VisibilityFlags {
  std::vector<std::uint8_t> contributed;
  std::vector<std::uint8_t> in_frustum;
};
VisibilityFlags gather_visibility(const SplatSet& splats, std::span<const CameraView> cameras,
                                  const RenderOptions& options = {});

struct OcclusionReport {
  std::size_t total = 0;
  std::size_t occluded = 0;            // never contributed to any pixel
  std::size_t in_frustum_occluded = 0;  // inside some frustum yet never blended
  std::size_t out_of_frustum = 0;       // culled in every view
  double ratio = 0.0;                   // occluded / total (0 for an empty set)
  std::vector<std::size_t> occluded_indices;
};
OcclusionReport make_occlusion_report(const VisibilityFlags& flags);

/// Renders every view, removes splats that never contributed, and reports what was removed.
OcclusionReport post_train_occlusion_prune(SplatSet& splats, std::span<const TrainingView> views,
                                           const RenderOptions& options = {}, RowMap* rows = nullptr);

}  // namespace ocgs
