#include "ocgs/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "ocgs/error.hpp"
#include "ocgs/splat_io.hpp"

namespace ocgs {

std::string record_line(const IterationRecord& r) {
  const nlohmann::json j = {{"iter", r.iteration},
                            {"view", r.view},
                            {"total", r.loss.total},
                            {"photometric", r.loss.photometric},
                            {"background", r.loss.background},
                            {"depth_distortion", r.loss.depth_distortion},
                            {"normal_consistency", r.loss.normal_consistency},
                            {"splats", r.splats}};
  return j.dump();
}

RenderOptions training_render_options(const TrainConfig& c, int degree, bool distortion) {
  RenderOptions o;
  o.settings = c.render_settings();
  o.background = c.background;
  o.sh_degree = degree;
  o.distortion = distortion;
  return o;
}

Trainer::Trainer(std::vector<TrainingView> views, SplatSet init, const TrainConfig& config)
    : views_(std::move(views)), config_(config.resolved(views_.size())) {
  prepare_views();
  state_.splats = std::move(init);
  state_.splats.check_consistent();
  state_.optimizer.reset(state_.splats.size(), state_.splats.coeffs());
  state_.seed = config_.seed;
  state_.rng.seed(config_.seed);
  state_.active_sh_degree = 0;
}

Trainer::Trainer(std::vector<TrainingView> views, TrainState state, const TrainConfig& config)
    : views_(std::move(views)), config_(config.resolved(views_.size())), state_(std::move(state)) {
  prepare_views();
  if (state_.optimizer.rows() != state_.splats.size())
    throw Error(ErrorKind::checkpoint, "optimizer state does not match splat count");
}

void Trainer::prepare_views() {
  config_.validate();
  if (views_.empty()) throw Error(ErrorKind::config, "training needs at least one view");
  for (auto& v : views_) v.validate();
  if (config_.use_masks) {
    bool any = false;
    for (const auto& v : views_)
      any = any || std::any_of(v.mask.data.begin(), v.mask.data.end(), [](double m) { return m > 0.0; });
    if (!any) throw Error(ErrorKind::config, "every training mask is empty");
  } else {
    for (auto& v : views_) std::fill(v.mask.data.begin(), v.mask.data.end(), 1.0);
  }
  extent_ = camera_extent(std::span<const TrainingView>(views_));
}

std::uint32_t Trainer::next_view() {
  if (state_.permutation_pos >= state_.permutation.size()) {
    state_.permutation.resize(views_.size());
    std::iota(state_.permutation.begin(), state_.permutation.end(), 0u);
    // Fisher-Yates with explicit draws so the sequence depends only on the engine state.
    for (std::size_t i = state_.permutation.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(state_.permutation[i - 1], state_.permutation[pick(state_.rng)]);
    }
    state_.permutation_pos = 0;
  }
  return state_.permutation[state_.permutation_pos++];
}

IterationRecord Trainer::step() {
  TrainState& st = state_;
  const TrainConfig& c = config_;
  const int it = st.iteration + 1;

  if (it % c.sh_upgrade_interval == 0 && st.active_sh_degree < std::min(c.sh_degree_max, st.splats.sh_degree))
    ++st.active_sh_degree;

  const std::uint32_t vi = next_view();
  const TrainingView& view = views_[vi];
  const LossWeights weights = LossWeights::at(c, it);
  const RenderOptions opt = training_render_options(c, st.active_sh_degree, weights.alpha != 0.0);

  const RenderOutput out = render_forward(st.splats, view.camera, opt);
  TotalLoss loss;
  try {
    loss = total_loss(view, out, weights);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::numerical) throw;
    if (!diagnostics_.empty()) save_splats(diagnostics_, st.splats);
    throw Error(ErrorKind::numerical, "non-finite loss at iteration " + std::to_string(it) + " on view " +
                                          std::to_string(vi) + " with " + std::to_string(st.splats.size()) +
                                          " splats" + (diagnostics_.empty() ? "" : "; snapshot at " + diagnostics_.string()));
  }
  const SplatGradients grads = render_backward(st.splats, view.camera, opt, out, loss.adjoints);

  const bool control = it <= c.densify_until_iter;
  if (control) accumulate_stats(st.splats, out, grads);

  adam_step(st.splats, grads, st.optimizer, learning_rates_at(c, it, extent_));

  if (control) {
    if (c.occlusion_prune && c.occlusion_prune_interval > 0 && it % c.occlusion_prune_interval == 0)
      apply(prune_occluded(st.splats, &st.counters));
    if (it > c.densify_from_iter && it % c.densify_interval == 0) {
      apply(densify(st.splats, c, extent_, st.rng, &st.counters));
      apply(prune_transparent(st.splats, c, extent_, it > c.opacity_reset_interval, &st.counters));
    }
    if (it % c.opacity_reset_interval == 0 && it < c.densify_until_iter) {
      reset_opacity(st.splats);
      st.optimizer.zero_group(kOpacity);
    }
  }
  st.iteration = it;
  return {it, static_cast<int>(vi), loss.breakdown, st.splats.size()};
}

void Trainer::run(int until, std::ostream* log) {
  until = std::min(until, config_.iterations);
  while (state_.iteration < until) {
    const IterationRecord r = step();
    if (log) *log << record_line(r) << '\n';
  }
}

TrainResult train(const std::vector<TrainingView>& views, const SplatSet& init, const TrainConfig& config,
                  std::ostream* log) {
  Trainer t(views, init, config);
  TrainResult r;
  const int n = t.config().iterations;
  r.log.reserve(static_cast<std::size_t>(std::max(0, n)));
  while (t.state().iteration < n) {
    r.log.push_back(t.step());
    if (log) *log << record_line(r.log.back()) << '\n';
  }
  r.splats = t.state().splats;
  r.counters = t.state().counters;
  return r;
}

}  // namespace ocgs
