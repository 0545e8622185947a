#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "spikefab/common.hpp"

namespace spikefab {

// alpha_i = exp(-dt/tau_s), alpha_v = exp(-dt/tau_m)
std::pair<float, float> decay_factors(float tau_s, float tau_m, float dt);

// Constants of one leaky integrate-and-fire layer. Threshold is fixed at 1;
// a membrane potential of exactly 1 fires.
struct LayerParams {
  float tau_s = 5.0f;
  float tau_m = 20.0f;
  float dt = 1.0f;
  float alpha_i = 0.0f;
  float alpha_v = 0.0f;
  static constexpr float threshold = 1.0f;

  static LayerParams make(float tau_s, float tau_m, float dt);
};

// Dense synaptic weights; row = postsynaptic index j, column = presynaptic
// index k.
struct WeightMatrix {
  int n_out = 0;
  int n_in = 0;
  std::vector<float> w;  // row-major n_out x n_in

  WeightMatrix() = default;
  WeightMatrix(int n_out_, int n_in_)
      : n_out(n_out_), n_in(n_in_),
        w(static_cast<std::size_t>(n_out_) * n_in_, 0.0f) {}

  float& at(int j, int k) { return w[static_cast<std::size_t>(j) * n_in + k]; }
  float at(int j, int k) const {
    return w[static_cast<std::size_t>(j) * n_in + k];
  }
};

// Entries drawn i.i.d. from Normal(s_mu/sqrt(n_in), s_sigma/sqrt(n_in)),
// row-major draw order.
WeightMatrix init_weights(int n_in, int n_out, float s_mu, float s_sigma,
                          std::mt19937& rng);

// Forward state of one layer plus the recorded trajectory of one sample.
// Trace row r holds the state at step r+1; the step-0 state is the all-zero
// initial condition and is not stored.
struct LayerState {
  int n = 0;
  int steps = 0;  // completed update steps == trace rows
  std::vector<float> i;
  std::vector<float> v;
  std::vector<float> i_trace;
  std::vector<float> v_trace;
  std::vector<std::uint8_t> raster;

  explicit LayerState(int n_neurons)
      : n(n_neurons), i(n_neurons, 0.0f), v(n_neurons, 0.0f) {}

  // t in [0, steps]; t = 0 reads the initial condition.
  float i_at(int t, int j) const {
    return t == 0 ? 0.0f : i_trace[static_cast<std::size_t>(t - 1) * n + j];
  }
  float v_at(int t, int j) const {
    return t == 0 ? 0.0f : v_trace[static_cast<std::size_t>(t - 1) * n + j];
  }
  bool spiked(int t, int j) const {
    return t != 0 && raster[static_cast<std::size_t>(t - 1) * n + j] != 0;
  }

  void reset();
};

// Backward state: current-adjoints lambda, voltage-adjoints mu, and the
// per-sample gradient accumulator (n x n_pre).
struct AdjointState {
  int n = 0;
  int n_pre = 0;
  std::vector<float> lambda;
  std::vector<float> mu;
  std::vector<float> grad;  // row-major n x n_pre
  std::uint64_t guard_hits = 0;

  bool record = false;
  std::vector<float> lambda_trace;  // total_steps x n when recording; row = step
  std::vector<float> mu_trace;

  AdjointState(int n_neurons, int n_presyn)
      : n(n_neurons), n_pre(n_presyn), lambda(n_neurons, 0.0f),
        mu(n_neurons, 0.0f),
        grad(static_cast<std::size_t>(n_neurons) * n_presyn, 0.0f) {}

  void reset(bool clear_grad);
  void begin_recording(int total_steps);
};

enum class AdjointVariant {
  exponential_euler,  // lambda_t = aI*lambda_{t+1} + (1-aI)*mu_{t+1}
  as_printed,         // lambda_t = aI*mu_{t+1} + (1-aI)*lambda_{t+1}
};

// Advances the layer one step t -> t+1 and appends to the traces.
// presyn_spikes: ascending indices of upstream neurons that spiked at step t.
// Returns the ascending indices of neurons whose new potential reached
// threshold. Out-of-range presynaptic indices raise FabricError.
std::vector<std::uint32_t> forward_step(LayerState& state, const LayerParams& p,
                                        const WeightMatrix& w,
                                        std::span<const std::uint32_t> presyn_spikes);

// One reverse step computing the adjoints at step t from those at t+1.
// brackets[j]: error value delivered for step t+1 (zero where none arrived).
// presyn_spikes: ascending indices of upstream neurons that spiked at step t;
// for each, the gradient column is accumulated and an upstream error value
// e_k = sum_j W[j][k]*(mu_t[j] - lambda_t[j]) is appended to upstream_errors
// in the same order. A mu jump whose |I - V| denominator falls below
// eps_guard is dropped and counted in guard_hits.
void backward_step(AdjointState& adj, const LayerState& recorded, int t,
                   const LayerParams& p, const WeightMatrix& w,
                   AdjointVariant variant, float eps_guard,
                   std::span<const float> brackets,
                   std::span<const std::uint32_t> presyn_spikes,
                   std::vector<float>& upstream_errors);

// Zeroes state and adjoints and clears the traces. Weights are untouched;
// the gradient accumulator is cleared only when clear_grad is set.
void reset_state(LayerState& state, AdjointState& adj, bool clear_grad);

}  // namespace spikefab
