#include "spikefab/optim.hpp"

#include <cmath>
#include <string>

namespace spikefab {

GradientSet GradientSet::zeros_like(std::span<const WeightMatrix> weights) {
  GradientSet g;
  g.layers.reserve(weights.size());
  for (const WeightMatrix& w : weights)
    g.layers.emplace_back(w.w.size(), 0.0f);
  return g;
}

GradientSet combine(std::span<const GradientSet> replica_grads,
                    GradReduction mode) {
  if (replica_grads.empty()) throw ConfigError("combine needs >= 1 gradient set");
  GradientSet out;
  out.layers.resize(replica_grads[0].layers.size());
  for (std::size_t l = 0; l < out.layers.size(); ++l)
    out.layers[l].assign(replica_grads[0].layers[l].size(), 0.0f);
  for (const GradientSet& g : replica_grads) {
    if (g.layers.size() != out.layers.size())
      throw ConfigError("gradient set layer count mismatch");
    for (std::size_t l = 0; l < out.layers.size(); ++l) {
      if (g.layers[l].size() != out.layers[l].size())
        throw ConfigError("gradient shape mismatch at layer " + std::to_string(l));
      for (std::size_t i = 0; i < out.layers[l].size(); ++i)
        out.layers[l][i] += g.layers[l][i];
    }
  }
  if (mode == GradReduction::mean) {
    const float inv = 1.0f / static_cast<float>(replica_grads.size());
    for (auto& layer : out.layers)
      for (float& x : layer) x *= inv;
  }
  return out;
}

AdamState AdamState::make(const AdamConfig& cfg,
                          std::span<const WeightMatrix> weights) {
  AdamState s;
  s.cfg = cfg;
  s.lr = cfg.lr;
  for (const WeightMatrix& w : weights) {
    s.m.emplace_back(w.w.size(), 0.0f);
    s.v.emplace_back(w.w.size(), 0.0f);
  }
  return s;
}

void adam_step(AdamState& state, const GradientSet& grads,
               std::vector<WeightMatrix>& weights) {
  if (grads.layers.size() != weights.size())
    throw ConfigError("adam_step: layer count mismatch");
  const AdamConfig& c = state.cfg;
  const long t = state.step_count + 1;
  const float corr1 =
      1.0f - static_cast<float>(std::pow(static_cast<double>(c.beta1), t));
  const float corr2 =
      1.0f - static_cast<float>(std::pow(static_cast<double>(c.beta2), t));
  for (std::size_t l = 0; l < weights.size(); ++l) {
    auto& w = weights[l].w;
    auto& m = state.m[l];
    auto& v = state.v[l];
    const auto& gl = grads.layers[l];
    if (gl.size() != w.size())
      throw ConfigError("adam_step: gradient shape mismatch at layer " +
                        std::to_string(l));
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!std::isfinite(gl[i]))
        throw std::runtime_error("non-finite gradient at layer " +
                                 std::to_string(l) + " index " +
                                 std::to_string(i));
      float g = gl[i];
      if (!c.decoupled_wd) g += c.weight_decay * w[i];
      m[i] = c.beta1 * m[i] + (1.0f - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0f - c.beta2) * g * g;
      const float mhat = m[i] / corr1;
      const float vhat = v[i] / corr2;
      float upd = state.lr * mhat / (std::sqrt(vhat) + c.eps);
      if (c.decoupled_wd) upd += state.lr * c.weight_decay * w[i];
      w[i] -= upd;
    }
  }
  ++state.step_count;
}

void epoch_decay(AdamState& state) { state.lr *= state.cfg.gamma; }

}  // namespace spikefab
