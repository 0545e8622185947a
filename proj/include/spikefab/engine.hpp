#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "spikefab/layer.hpp"
#include "spikefab/loss.hpp"
#include "spikefab/optim.hpp"
#include "spikefab/yinyang.hpp"

namespace spikefab {

struct SampleStats {
  double loss = 0.0;
  int prediction = kAbstain;
  int label = 0;
  int silent_outputs = 0;
};

struct BatchStats {
  std::vector<SampleStats> samples;
  std::uint64_t guard_hits = 0;
  int ticks_per_sample = 0;  // 0 for engines without a tick schedule
};

// Full per-sample state capture for cross-engine comparison. Trace row r of
// i/v/raster holds step r+1; adjoint row t holds step t.
struct LayerRec {
  int n = 0;
  int n_pre = 0;
  std::vector<float> i_trace;
  std::vector<float> v_trace;
  std::vector<std::uint8_t> raster;
  std::vector<float> lambda_trace;
  std::vector<float> mu_trace;
  std::vector<float> grad;
};

struct SampleRec {
  std::vector<LayerRec> layers;
  std::vector<int> first_steps;
};

struct BatchRecording {
  std::vector<SampleRec> samples;
  std::vector<WeightMatrix> post_weights;
};

// A training engine owns the network weights and processes one mini-batch at
// a time: forward + backward per replica, gradient gathering, one optimizer
// step, weight scatter.
class Engine {
 public:
  virtual ~Engine() = default;
  virtual BatchStats train_batch(std::span<const Sample> samples,
                                 AdamState& adam) = 0;
  virtual const std::vector<WeightMatrix>& weights() const = 0;
  virtual void set_weights(std::vector<WeightMatrix> w) = 0;
  virtual void set_recording(bool on) = 0;
  virtual const BatchRecording& recording() const = 0;
};

}  // namespace spikefab
