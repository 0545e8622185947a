#include "spikefab/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spikefab {

namespace {

// Stable softmax over z_k = -t_k*dt/tau0 with silent neurons resolved to T.
std::vector<double> spike_softmax(const FirstSpikeRecord& rec,
                                  const LossConfig& cfg) {
  const int n = rec.n();
  std::vector<double> z(n);
  for (int k = 0; k < n; ++k) {
    const int t = rec.first_step[k] == FirstSpikeRecord::kNone
                      ? cfg.total_steps
                      : rec.first_step[k];
    z[k] = -(t * cfg.dt) / cfg.tau0;
  }
  const double zmax = *std::max_element(z.begin(), z.end());
  double denom = 0.0;
  for (int k = 0; k < n; ++k) denom += std::exp(z[k] - zmax);
  std::vector<double> p(n);
  for (int k = 0; k < n; ++k) p[k] = std::exp(z[k] - zmax) / denom;
  return p;
}

double resolved_step(const FirstSpikeRecord& rec, const LossConfig& cfg, int k) {
  return rec.first_step[k] == FirstSpikeRecord::kNone ? cfg.total_steps
                                                      : rec.first_step[k];
}

}  // namespace

void record_spike(FirstSpikeRecord& rec, int neuron, int step,
                  const LossConfig& cfg) {
  if (neuron < 0 || neuron >= rec.n())
    throw FabricError("loss received spike for neuron " +
                      std::to_string(neuron) + " with only " +
                      std::to_string(rec.n()) + " classes");
  if (step < 0 || step > cfg.total_steps)
    throw FabricError("loss received spike at step " + std::to_string(step) +
                      " outside [0, " + std::to_string(cfg.total_steps) + "]");
  if (rec.first_step[neuron] == FirstSpikeRecord::kNone)
    rec.first_step[neuron] = step;
}

double compute_loss(const FirstSpikeRecord& rec, const LossConfig& cfg) {
  const auto p = spike_softmax(rec, cfg);
  const double ce = -std::log(p[rec.label]);
  const double tl = resolved_step(rec, cfg, rec.label) * cfg.dt;
  const double reg =
      -cfg.reg_sign * cfg.alpha * (std::exp(tl / cfg.tau1) - 1.0);
  return ce + reg;
}

std::vector<ErrorEntry> compute_error_signals(const FirstSpikeRecord& rec,
                                              const LossConfig& cfg) {
  const auto p = spike_softmax(rec, cfg);
  std::vector<ErrorEntry> out;
  for (int k = 0; k < rec.n(); ++k) {
    if (rec.first_step[k] == FirstSpikeRecord::kNone) continue;
    double value = ((k == rec.label ? 1.0 : 0.0) - p[k]) / cfg.tau0;
    if (k == rec.label) {
      const double tl = rec.first_step[k] * cfg.dt;
      value -= cfg.reg_sign * (cfg.alpha / cfg.tau1) * std::exp(tl / cfg.tau1);
    }
    out.push_back({k, rec.first_step[k], value});
  }
  return out;
}

int predict(const FirstSpikeRecord& rec) {
  int best = kAbstain;
  for (int k = 0; k < rec.n(); ++k) {
    if (rec.first_step[k] == FirstSpikeRecord::kNone) continue;
    if (best == kAbstain || rec.first_step[k] < rec.first_step[best]) best = k;
  }
  return best;
}

int silent_count(const FirstSpikeRecord& rec) {
  int n = 0;
  for (int s : rec.first_step)
    if (s == FirstSpikeRecord::kNone) ++n;
  return n;
}

}  // namespace spikefab
