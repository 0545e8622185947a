#pragma once

#include <span>

#include "spikefab/config.hpp"
#include "spikefab/engine.hpp"

namespace spikefab {

struct ForwardOutcome {
  FirstSpikeRecord rec;
  double loss = 0.0;
  int prediction = kAbstain;
  int silent = 0;
};

// Forward-only pass through the dense network. Shares the layer update code
// with both engines, so its outputs match them bit for bit.
ForwardOutcome dense_forward(const Sample& sample,
                             std::span<const WeightMatrix> weights,
                             const LayerParams& params,
                             const LossConfig& loss_cfg);

// Single-process engine computing the identical discretized equations in the
// identical deterministic order as the fabric; the oracle the fabric is
// checked against.
class ReferenceEngine : public Engine {
 public:
  ReferenceEngine(const RunConfig& cfg, std::vector<WeightMatrix> weights);

  BatchStats train_batch(std::span<const Sample> samples,
                         AdamState& adam) override;

  // Forward + backward for one sample, leaving the weights untouched.
  struct SampleGradients {
    GradientSet grads;
    double loss = 0.0;
    int prediction = kAbstain;
    std::uint64_t guard_hits = 0;
  };
  SampleGradients sample_gradients(const Sample& sample,
                                   SampleRec* rec = nullptr);

  const std::vector<WeightMatrix>& weights() const override { return weights_; }
  void set_weights(std::vector<WeightMatrix> w) override {
    weights_ = std::move(w);
  }
  void set_recording(bool on) override { recording_enabled_ = on; }
  const BatchRecording& recording() const override { return recording_; }

 private:
  struct SampleOutput {
    SampleStats stats;
    GradientSet grads;
    std::uint64_t guard_hits = 0;
  };
  SampleOutput run_sample(const Sample& sample, SampleRec* rec_out);

  RunConfig cfg_;
  LayerParams params_;
  LossConfig loss_cfg_;
  std::vector<WeightMatrix> weights_;
  bool recording_enabled_ = false;
  BatchRecording recording_;
};

}  // namespace spikefab
