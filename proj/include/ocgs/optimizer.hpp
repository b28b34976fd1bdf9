#pragma once

#include <array>
#include <vector>

#include "ocgs/config.hpp"
#include "ocgs/density_control.hpp"
#include "ocgs/rasterizer.hpp"
#include "ocgs/scene_model.hpp"

namespace ocgs {

enum ParamGroup { kPosition = 0, kRotation, kScale, kOpacity, kShDc, kShRest, kGroupCount };

struct LearningRates {
  std::array<double, kGroupCount> lr{};
};

/// Position rate decays exponentially from init to final over the run; both are
/// multiplied by the scene extent. Other groups use constant rates.
LearningRates learning_rates_at(const TrainConfig& config, int iteration, double scene_extent);

/// First/second moment rows aligned with the splat rows, one block per parameter group.
struct OptimizerState {
  std::uint64_t step = 0;
  std::array<std::vector<double>, kGroupCount> m;
  std::array<std::vector<double>, kGroupCount> v;
  std::array<int, kGroupCount> stride{};

  void reset(std::size_t rows, int sh_coeffs);
  std::size_t rows() const { return stride[0] ? m[0].size() / stride[0] : 0; }

  /// Applies a population rewrite; rows with source -1 start from zero moments.
  void remap(const RowMap& map);
  void zero_group(ParamGroup g);
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-15;
};

/// One bias-corrected adaptive-moment step over every parameter, followed by quaternion
/// renormalization.
void adam_step(SplatSet& splats, const SplatGradients& grads, OptimizerState& state, const LearningRates& rates,
               const AdamHyper& hyper = {});

}  // namespace ocgs
