#include "spikefab/layer.hpp"

#include <cmath>
#include <string>

namespace spikefab {

std::pair<float, float> decay_factors(float tau_s, float tau_m, float dt) {
  if (!(tau_s > 0.0f) || !(tau_m > 0.0f))
    throw ConfigError("time constants must be positive (tau_s=" +
                      std::to_string(tau_s) + ", tau_m=" + std::to_string(tau_m) + ")");
  if (dt < 0.0f) throw ConfigError("dt must be non-negative");
  return {std::exp(-dt / tau_s), std::exp(-dt / tau_m)};
}

LayerParams LayerParams::make(float tau_s, float tau_m, float dt) {
  auto [ai, av] = decay_factors(tau_s, tau_m, dt);
  LayerParams p;
  p.tau_s = tau_s;
  p.tau_m = tau_m;
  p.dt = dt;
  p.alpha_i = ai;
  p.alpha_v = av;
  return p;
}

WeightMatrix init_weights(int n_in, int n_out, float s_mu, float s_sigma,
                          std::mt19937& rng) {
  if (n_in < 1 || n_out < 1)
    throw ConfigError("weight matrix dimensions must be positive");
  const float scale = 1.0f / std::sqrt(static_cast<float>(n_in));
  std::normal_distribution<float> dist(s_mu * scale, s_sigma * scale);
  WeightMatrix w(n_out, n_in);
  for (float& x : w.w) x = s_sigma == 0.0f ? s_mu * scale : dist(rng);
  return w;
}

void LayerState::reset() {
  std::fill(i.begin(), i.end(), 0.0f);
  std::fill(v.begin(), v.end(), 0.0f);
  i_trace.clear();
  v_trace.clear();
  raster.clear();
  steps = 0;
}

void AdjointState::reset(bool clear_grad) {
  std::fill(lambda.begin(), lambda.end(), 0.0f);
  std::fill(mu.begin(), mu.end(), 0.0f);
  if (clear_grad) std::fill(grad.begin(), grad.end(), 0.0f);
  lambda_trace.clear();
  mu_trace.clear();
}

void AdjointState::begin_recording(int total_steps) {
  record = true;
  lambda_trace.assign(static_cast<std::size_t>(total_steps) * n, 0.0f);
  mu_trace.assign(static_cast<std::size_t>(total_steps) * n, 0.0f);
}

std::vector<std::uint32_t> forward_step(LayerState& state, const LayerParams& p,
                                        const WeightMatrix& w,
                                        std::span<const std::uint32_t> presyn_spikes) {
  for (std::uint32_t k : presyn_spikes)
    if (k >= static_cast<std::uint32_t>(w.n_in))
      throw FabricError("spike index " + std::to_string(k) +
                        " out of range for layer width " + std::to_string(w.n_in));

  const float one_minus_av = 1.0f - p.alpha_v;
  std::vector<std::uint32_t> emitted;
  for (int j = 0; j < state.n; ++j) {
    float cur = p.alpha_i * state.i[j];
    for (std::uint32_t k : presyn_spikes) cur += w.at(j, static_cast<int>(k));
    const float leak =
        state.v[j] >= LayerParams::threshold ? 0.0f : p.alpha_v * state.v[j];
    const float vn = leak + one_minus_av * cur;
    state.i[j] = cur;
    state.v[j] = vn;
    state.i_trace.push_back(cur);
    state.v_trace.push_back(vn);
    const bool fired = vn >= LayerParams::threshold;
    state.raster.push_back(fired ? 1 : 0);
    if (fired) emitted.push_back(static_cast<std::uint32_t>(j));
  }
  ++state.steps;
  return emitted;
}

void backward_step(AdjointState& adj, const LayerState& recorded, int t,
                   const LayerParams& p, const WeightMatrix& w,
                   AdjointVariant variant, float eps_guard,
                   std::span<const float> brackets,
                   std::span<const std::uint32_t> presyn_spikes,
                   std::vector<float>& upstream_errors) {
  const float one_minus_ai = 1.0f - p.alpha_i;
  for (int j = 0; j < adj.n; ++j) {
    const float mu_old = adj.mu[j];
    const float lam_old = adj.lambda[j];
    float mu_new = p.alpha_v * mu_old;
    if (recorded.spiked(t + 1, j)) {
      const float denom = recorded.i_at(t + 1, j) - recorded.v_at(t + 1, j);
      if (std::fabs(denom) < eps_guard)
        ++adj.guard_hits;
      else
        mu_new += (mu_old + brackets[j]) / denom;
    }
    const float lam_new = variant == AdjointVariant::exponential_euler
                              ? p.alpha_i * lam_old + one_minus_ai * mu_old
                              : p.alpha_i * mu_old + one_minus_ai * lam_old;
    adj.mu[j] = mu_new;
    adj.lambda[j] = lam_new;
    if (adj.record) {
      adj.lambda_trace[static_cast<std::size_t>(t) * adj.n + j] = lam_new;
      adj.mu_trace[static_cast<std::size_t>(t) * adj.n + j] = mu_new;
    }
  }

  upstream_errors.clear();
  const float neg_tau_s = -p.tau_s;
  for (std::uint32_t k : presyn_spikes) {
    float e = 0.0f;
    for (int j = 0; j < adj.n; ++j) {
      adj.grad[static_cast<std::size_t>(j) * adj.n_pre + k] +=
          neg_tau_s * adj.lambda[j];
      e += w.at(j, static_cast<int>(k)) * (adj.mu[j] - adj.lambda[j]);
    }
    upstream_errors.push_back(e);
  }
}

void reset_state(LayerState& state, AdjointState& adj, bool clear_grad) {
  state.reset();
  adj.reset(clear_grad);
}

}  // namespace spikefab
