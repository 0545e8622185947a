#include "spikefab/reference.hpp"

#include <algorithm>

namespace spikefab {

namespace {

std::vector<std::uint32_t> input_spikes_at(const Sample& sample, int t,
                                           int width) {
  std::vector<std::uint32_t> out;
  for (int k = 0; k < width; ++k)
    if (sample.spike_steps[k] == t) out.push_back(static_cast<std::uint32_t>(k));
  return out;
}

std::vector<std::uint32_t> raster_spikes_at(const LayerState& state, int t) {
  std::vector<std::uint32_t> out;
  if (t == 0) return out;
  for (int j = 0; j < state.n; ++j)
    if (state.spiked(t, j)) out.push_back(static_cast<std::uint32_t>(j));
  return out;
}

}  // namespace

ForwardOutcome dense_forward(const Sample& sample,
                             std::span<const WeightMatrix> weights,
                             const LayerParams& params,
                             const LossConfig& loss_cfg) {
  const int n_layers = static_cast<int>(weights.size());
  const int T = loss_cfg.total_steps;
  std::vector<LayerState> states;
  states.reserve(n_layers);
  for (const WeightMatrix& w : weights) states.emplace_back(w.n_out);

  ForwardOutcome out{FirstSpikeRecord(weights.back().n_out, sample.raw.label)};
  std::vector<std::vector<std::uint32_t>> spikes_now(n_layers);
  for (int t = 0; t < T; ++t) {
    for (int l = n_layers - 1; l >= 0; --l) {
      const auto presyn = l == 0 ? input_spikes_at(sample, t, weights[0].n_in) : spikes_now[l - 1];
      spikes_now[l] = forward_step(states[l], params, weights[l], presyn);
    }
    for (std::uint32_t j : spikes_now[n_layers - 1])
      record_spike(out.rec, static_cast<int>(j), t + 1, loss_cfg);
  }
  out.loss = compute_loss(out.rec, loss_cfg);
  out.prediction = predict(out.rec);
  out.silent = silent_count(out.rec);
  return out;
}

ReferenceEngine::ReferenceEngine(const RunConfig& cfg,
                                 std::vector<WeightMatrix> weights)
    : cfg_(cfg), params_(cfg.layer_params()), loss_cfg_(cfg.loss_config()),
      weights_(std::move(weights)) {}

ReferenceEngine::SampleOutput ReferenceEngine::run_sample(const Sample& sample,
                                                          SampleRec* rec_out) {
  const int n_layers = cfg_.n_weight_layers();
  const int T = cfg_.total_steps;

  std::vector<LayerState> states;
  std::vector<AdjointState> adjoints;
  for (int l = 0; l < n_layers; ++l) {
    states.emplace_back(cfg_.net_dims[l + 1]);
    adjoints.emplace_back(cfg_.net_dims[l + 1], cfg_.net_dims[l]);
    if (rec_out) adjoints.back().begin_recording(T);
  }

  // Forward; layer l consumes layer l-1 spikes from the previous step.
  FirstSpikeRecord rec(cfg_.net_dims.back(), sample.raw.label);
  std::vector<std::vector<std::uint32_t>> spikes_now(n_layers);
  for (int t = 0; t < T; ++t) {
    for (int l = n_layers - 1; l >= 0; --l) {
      const auto presyn = l == 0 ? input_spikes_at(sample, t, weights_[0].n_in) : spikes_now[l - 1];
      spikes_now[l] = forward_step(states[l], params_, weights_[l], presyn);
    }
    for (std::uint32_t j : spikes_now[n_layers - 1])
      record_spike(rec, static_cast<int>(j), t + 1, loss_cfg_);
  }

  const auto loss_errors = compute_error_signals(rec, loss_cfg_);

  // Backward; emissions produced at step t feed the upstream layer's bracket
  // one step later, mirroring the fabric's one-tick delivery.
  std::vector<std::vector<float>> saved_emissions(n_layers);
  std::vector<std::vector<std::uint32_t>> saved_presyn(n_layers);
  std::vector<float> brackets;
  std::vector<std::vector<std::uint32_t>> presyn_at(n_layers);
  std::vector<std::vector<float>> emissions(n_layers);
  for (int t = T - 1; t >= 0; --t) {
    for (int l = 0; l < n_layers; ++l)
      presyn_at[l] = l == 0 ? input_spikes_at(sample, t, weights_[0].n_in)
                            : raster_spikes_at(states[l - 1], t);
    for (int l = n_layers - 1; l >= 0; --l) {
      brackets.assign(states[l].n, 0.0f);
      if (l == n_layers - 1) {
        for (const ErrorEntry& e : loss_errors)
          if (e.step == t + 1) brackets[e.neuron] = static_cast<float>(e.value);
      } else {
        for (std::size_t idx = 0; idx < saved_presyn[l + 1].size(); ++idx)
          brackets[saved_presyn[l + 1][idx]] = saved_emissions[l + 1][idx];
      }
      backward_step(adjoints[l], states[l], t, params_, weights_[l],
                    cfg_.adjoint_variant, cfg_.singularity_eps, brackets,
                    presyn_at[l], emissions[l]);
    }
    for (int l = 0; l < n_layers; ++l) {
      saved_emissions[l] = emissions[l];
      saved_presyn[l] = presyn_at[l];
    }
  }

  SampleOutput out;
  out.stats = {compute_loss(rec, loss_cfg_), predict(rec), sample.raw.label,
               silent_count(rec)};
  out.grads.layers.reserve(n_layers);
  for (int l = 0; l < n_layers; ++l) {
    out.grads.layers.push_back(adjoints[l].grad);
    out.guard_hits += adjoints[l].guard_hits;
  }
  if (rec_out) {
    rec_out->layers.clear();
    for (int l = 0; l < n_layers; ++l) {
      LayerRec lr;
      lr.n = states[l].n;
      lr.n_pre = adjoints[l].n_pre;
      lr.i_trace = states[l].i_trace;
      lr.v_trace = states[l].v_trace;
      lr.raster = states[l].raster;
      lr.lambda_trace = adjoints[l].lambda_trace;
      lr.mu_trace = adjoints[l].mu_trace;
      lr.grad = adjoints[l].grad;
      rec_out->layers.push_back(std::move(lr));
    }
    rec_out->first_steps = rec.first_step;
  }
  return out;
}

ReferenceEngine::SampleGradients ReferenceEngine::sample_gradients(
    const Sample& sample, SampleRec* rec) {
  SampleOutput out = run_sample(sample, rec);
  return {std::move(out.grads), out.stats.loss, out.stats.prediction,
          out.guard_hits};
}

BatchStats ReferenceEngine::train_batch(std::span<const Sample> samples,
                                        AdamState& adam) {
  if (samples.empty()) throw ConfigError("empty batch");
  if (static_cast<int>(samples.size()) > cfg_.batch_size)
    throw ConfigError("batch larger than configured batch_size");
  BatchStats stats;
  recording_.samples.clear();
  recording_.post_weights.clear();
  if (recording_enabled_) recording_.samples.resize(samples.size());

  std::vector<GradientSet> replica_grads;
  replica_grads.reserve(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    SampleRec* rec = recording_enabled_ ? &recording_.samples[s] : nullptr;
    SampleOutput out = run_sample(samples[s], rec);
    stats.samples.push_back(out.stats);
    stats.guard_hits += out.guard_hits;
    replica_grads.push_back(std::move(out.grads));
  }
  const GradientSet combined = combine(replica_grads, cfg_.optim.reduction);
  adam_step(adam, combined, weights_);
  if (recording_enabled_) recording_.post_weights = weights_;
  return stats;
}

}  // namespace spikefab
