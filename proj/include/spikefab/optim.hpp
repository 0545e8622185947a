#pragma once

#include <span>
#include <vector>

#include "spikefab/common.hpp"
#include "spikefab/layer.hpp"

namespace spikefab {

enum class GradReduction { sum, mean };

// Per-layer weight-shaped gradient matrices, flattened row-major.
struct GradientSet {
  std::vector<std::vector<float>> layers;

  static GradientSet zeros_like(std::span<const WeightMatrix> weights);
};

// Elementwise reduction over replica gradients, replica-ascending order.
GradientSet combine(std::span<const GradientSet> replica_grads,
                    GradReduction mode);

struct AdamConfig {
  float lr = 0.002f;
  float gamma = 0.93f;       // per-epoch lr multiplier
  float weight_decay = 6.5e-7f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  bool decoupled_wd = false;
  GradReduction reduction = GradReduction::sum;
};

struct AdamState {
  AdamConfig cfg;
  float lr = 0.002f;
  long step_count = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;

  static AdamState make(const AdamConfig& cfg,
                        std::span<const WeightMatrix> weights);
};

// Bias-corrected Adam with coupled L2 weight decay (decoupled behind the
// flag). Non-finite gradient entries are fatal.
void adam_step(AdamState& state, const GradientSet& grads,
               std::vector<WeightMatrix>& weights);

// lr *= gamma, exactly once per epoch.
void epoch_decay(AdamState& state);

}  // namespace spikefab
