#include "ocgs/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "ocgs/error.hpp"

namespace ocgs {

LearningRates learning_rates_at(const TrainConfig& c, int iteration, double extent) {
  LearningRates r;
  const double t = c.iterations > 0 ? std::clamp(static_cast<double>(iteration) / c.iterations, 0.0, 1.0) : 0.0;
  r.lr[kPosition] = std::exp((1.0 - t) * std::log(c.lr_position_init) + t * std::log(c.lr_position_final)) * extent;
  r.lr[kRotation] = c.lr_rotation;
  r.lr[kScale] = c.lr_scale;
  r.lr[kOpacity] = c.lr_opacity;
  r.lr[kShDc] = c.lr_sh_dc;
  r.lr[kShRest] = c.lr_sh_rest;
  return r;
}

void OptimizerState::reset(std::size_t rows, int coeffs) {
  stride = {3, 4, 2, 1, 3, 3 * (coeffs - 1)};
  for (int g = 0; g < kGroupCount; ++g) {
    m[g].assign(rows * stride[g], 0.0);
    v[g].assign(rows * stride[g], 0.0);
  }
}

void OptimizerState::remap(const RowMap& map) {
  for (int g = 0; g < kGroupCount; ++g) {
    const std::size_t s = static_cast<std::size_t>(stride[g]);
    std::vector<double> nm(map.source.size() * s, 0.0), nv(map.source.size() * s, 0.0);
    for (std::size_t i = 0; i < map.source.size(); ++i) {
      const std::int64_t src = map.source[i];
      if (src < 0) continue;
      for (std::size_t j = 0; j < s; ++j) {
        nm[i * s + j] = m[g][static_cast<std::size_t>(src) * s + j];
        nv[i * s + j] = v[g][static_cast<std::size_t>(src) * s + j];
      }
    }
    m[g] = std::move(nm);
    v[g] = std::move(nv);
  }
}

void OptimizerState::zero_group(ParamGroup g) {
  std::fill(m[g].begin(), m[g].end(), 0.0);
  std::fill(v[g].begin(), v[g].end(), 0.0);
}

void adam_step(SplatSet& s, const SplatGradients& g, OptimizerState& st, const LearningRates& rates,
               const AdamHyper& h) {
  const std::size_t n = s.size();
  if (st.rows() != n) throw Error(ErrorKind::contract, "optimizer state rows do not match the splat count");
  ++st.step;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(st.step));
  auto update = [&](ParamGroup grp, std::size_t idx, double grad, double& param) {
    double& m = st.m[grp][idx];
    double& v = st.v[grp][idx];
    m = h.beta1 * m + (1.0 - h.beta1) * grad;
    v = h.beta2 * v + (1.0 - h.beta2) * grad * grad;
    param -= rates.lr[grp] * (m / bc1) / (std::sqrt(v / bc2) + h.eps);
  };
  const int C = s.coeffs();
  for (std::size_t k = 0; k < n; ++k) {
    for (int a = 0; a < 3; ++a) update(kPosition, k * 3 + a, g.position[k][a], s.position[k][a]);
    for (int a = 0; a < 4; ++a) update(kRotation, k * 4 + a, g.rotation[k][a], s.rotation[k][a]);
    for (int a = 0; a < 2; ++a) update(kScale, k * 2 + a, g.log_scale[k][a], s.log_scale[k][a]);
    update(kOpacity, k, g.opacity_logit[k], s.opacity_logit[k]);
    const std::size_t base = k * C * 3;
    for (int ch = 0; ch < 3; ++ch) update(kShDc, k * 3 + ch, g.sh[base + ch], s.sh[base + ch]);
    for (int j = 3; j < C * 3; ++j)
      update(kShRest, k * (C - 1) * 3 + (j - 3), g.sh[base + j], s.sh[base + j]);
    const double qn = s.rotation[k].norm();
    if (qn > 0.0) s.rotation[k] /= qn;
  }
}

}  // namespace ocgs
