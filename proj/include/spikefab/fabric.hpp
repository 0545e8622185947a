#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <ostream>
#include <span>
#include <thread>
#include <vector>

#include "spikefab/config.hpp"
#include "spikefab/engine.hpp"
#include "spikefab/packet.hpp"

namespace spikefab {

// Persistent pool running `fn(0..n_tasks)` across workers; with one worker
// everything runs inline on the calling thread. Task outputs must be
// disjoint; the pool guarantees nothing about assignment order.
class WorkerPool {
 public:
  explicit WorkerPool(int n_workers);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int size() const { return n_workers_; }
  void run(int n_tasks, const std::function<void(int)>& fn);

 private:
  void worker_loop();

  int n_workers_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable cv_start_;
  std::condition_variable cv_done_;
  const std::function<void(int)>* fn_ = nullptr;
  int n_tasks_ = 0;
  std::atomic<int> next_task_{0};
  int active_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

// Emulated chip: replicas of input -> layers -> loss pipelines exchanging
// packets with one-tick latency, plus a control node that gathers gradients,
// runs the optimizer and scatters weights between samples.
class FabricEngine : public Engine {
 public:
  FabricEngine(const RunConfig& cfg, std::vector<WeightMatrix> weights);
  ~FabricEngine() override;

  BatchStats train_batch(std::span<const Sample> samples,
                         AdamState& adam) override;
  const std::vector<WeightMatrix>& weights() const override;
  void set_weights(std::vector<WeightMatrix> w) override;
  void set_recording(bool on) override { recording_enabled_ = on; }
  const BatchRecording& recording() const override { return recording_; }

  const Topology& topology() const { return topo_; }
  void set_trace(std::ostream* trace) { trace_ = trace; }

  // Per-replica weight copies of one layer, for scatter/barrier tests.
  const WeightMatrix& replica_weights(int replica, int layer) const;

  // Drops a packet into the fabric as if sent at the current tick; test and
  // debugging hook.
  void inject_packet(const Packet& p) { mailboxes_[p.target].pending.push_back(p); }

  // Invoked at the top of every tick of the sample pipeline; instrumentation
  // for protocol tests.
  void set_debug_hook(std::function<void(FabricEngine&, int)> hook) {
    debug_hook_ = std::move(hook);
  }

  // Steps one PE directly (outside the schedule); instrumentation only.
  void debug_step_pe(PeId id, const PhaseClock& clk);

 private:
  struct InputPe;
  struct LayerPe;
  struct LossPe;

  void reset_replicas(std::span<const Sample> samples);
  void step_pe(int pe_list_index, const PhaseClock& clk);
  void route_outboxes(const PhaseClock& clk);
  void run_sample_pipeline(int n_active);
  GradientSet gather_gradients(int replica) const;
  void scatter_weights();

  RunConfig cfg_;
  LayerParams params_;
  LossConfig loss_cfg_;
  Topology topo_;
  std::vector<WeightMatrix> master_weights_;  // control node's copy
  std::vector<std::unique_ptr<InputPe>> inputs_;
  std::vector<std::vector<std::unique_ptr<LayerPe>>> layers_;  // [replica][l-1]
  std::vector<std::unique_ptr<LossPe>> losses_;
  std::vector<Mailbox> mailboxes_;
  std::vector<PeId> active_pes_;
  std::vector<std::vector<Packet>> outboxes_;  // per active PE
  WorkerPool pool_;
  bool recording_enabled_ = false;
  BatchRecording recording_;
  std::ostream* trace_ = nullptr;
  std::function<void(FabricEngine&, int)> debug_hook_;
  int ticks_last_sample_ = 0;
};

}  // namespace spikefab
