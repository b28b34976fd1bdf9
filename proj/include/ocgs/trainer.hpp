#pragma once

#include <filesystem>
#include <ostream>
#include <random>
#include <vector>

#include "ocgs/config.hpp"
#include "ocgs/density_control.hpp"
#include "ocgs/losses.hpp"
#include "ocgs/optimizer.hpp"
#include "ocgs/scene_model.hpp"

namespace ocgs {

/// Everything needed to continue a run exactly where it stopped.
struct TrainState {
  SplatSet splats;
  OptimizerState optimizer;
  int iteration = 0;  // completed iterations
  int active_sh_degree = 0;
  std::mt19937_64 rng;
  std::vector<std::uint32_t> permutation;  // current epoch's view order
  std::uint32_t permutation_pos = 0;
  std::uint64_t seed = 0;
  ControlCounters counters;
};

struct IterationRecord {
  int iteration = 0;
  int view = 0;
  LossBreakdown loss;
  std::size_t splats = 0;
};

/// One newline-free JSON object describing an iteration.
std::string record_line(const IterationRecord& record);

class Trainer {
 public:
  /// Validates the config and views; throws ErrorKind::config if every mask is empty.
  Trainer(std::vector<TrainingView> views, SplatSet init, const TrainConfig& config);
  Trainer(std::vector<TrainingView> views, TrainState state, const TrainConfig& config);

  /// Runs iterations until `until` (capped at config.iterations) have completed.
  /// When `log` is set, each iteration appends one JSON object line.
  void run(int until, std::ostream* log = nullptr);
  void run_all(std::ostream* log = nullptr) { run(config_.iterations, log); }

  IterationRecord step();

  const TrainState& state() const { return state_; }
  TrainState& mutable_state() { return state_; }
  const TrainConfig& config() const { return config_; }
  double scene_extent() const { return extent_; }
  const std::vector<TrainingView>& views() const { return views_; }

  /// Where a snapshot of the splats is written if the loss turns non-finite.
  void set_diagnostics_path(std::filesystem::path p) { diagnostics_ = std::move(p); }

 private:
  std::vector<TrainingView> views_;
  TrainConfig config_;
  TrainState state_;
  double extent_ = 1.0;
  std::filesystem::path diagnostics_;

  void prepare_views();
  std::uint32_t next_view();
  void apply(const RowMap& rows) { state_.optimizer.remap(rows); }
};

struct TrainResult {
  SplatSet splats;
  std::vector<IterationRecord> log;
  ControlCounters counters;
};

/// Convenience wrapper: full run from an initial set.
TrainResult train(const std::vector<TrainingView>& views, const SplatSet& init, const TrainConfig& config,
                  std::ostream* log = nullptr);

/// Options the trainer uses to render a view at a given iteration.
RenderOptions training_render_options(const TrainConfig& config, int active_sh_degree, bool distortion);

}  // namespace ocgs
