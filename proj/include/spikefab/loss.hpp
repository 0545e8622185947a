#pragma once

#include <vector>

#include "spikefab/common.hpp"

namespace spikefab {

// Time-to-first-spike cross-entropy loss over the output layer:
//   L = -log( exp(-t_l*dt/tau0) / sum_k exp(-t_k*dt/tau0) )
//       - reg_sign * alpha * (exp(t_l*dt/tau1) - 1)
// reg_sign = +1 keeps the leading minus on the regularizer; -1 flips it.
struct LossConfig {
  double tau0 = 1.5;
  double tau1 = 100.0;
  double alpha = 0.01;
  int reg_sign = 1;
  double dt = 1.0;
  int n_classes = 3;
  int total_steps = 28;  // T; silent neurons resolve to t = T
};

// Earliest spike step per output neuron. kNone marks a silent neuron.
struct FirstSpikeRecord {
  static constexpr int kNone = -1;
  int label = 0;
  std::vector<int> first_step;

  explicit FirstSpikeRecord(int n_classes, int label_ = 0)
      : label(label_), first_step(n_classes, kNone) {}
  int n() const { return static_cast<int>(first_step.size()); }
};

// Records a spike; later spikes of an already-recorded neuron are ignored.
void record_spike(FirstSpikeRecord& rec, int neuron, int step,
                  const LossConfig& cfg);

double compute_loss(const FirstSpikeRecord& rec, const LossConfig& cfg);

// One backward error per neuron that actually spiked, attached at its
// recorded first spike step. Values are the derivatives of the loss with
// respect to physical spike time t*dt, computed in double; the engines
// round to 32-bit when injecting them into the output layer.
struct ErrorEntry {
  int neuron;
  int step;
  double value;
};
std::vector<ErrorEntry> compute_error_signals(const FirstSpikeRecord& rec,
                                              const LossConfig& cfg);

// argmin of recorded first spike steps; ties break to the lowest index and
// silent neurons never win. kAbstain when no neuron spiked.
inline constexpr int kAbstain = -1;
int predict(const FirstSpikeRecord& rec);

int silent_count(const FirstSpikeRecord& rec);

}  // namespace spikefab
