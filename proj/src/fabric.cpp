#include "spikefab/fabric.hpp"

#include <algorithm>
#include <string>

namespace spikefab {

// ---------------------------------------------------------------- WorkerPool

WorkerPool::WorkerPool(int n_workers) : n_workers_(n_workers) {
  if (n_workers_ < 1) throw ConfigError("workers must be >= 1");
  for (int i = 1; i < n_workers_; ++i)
    threads_.emplace_back([this] { worker_loop(); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lk(mutex_);
    stop_ = true;
  }
  cv_start_.notify_all();
  for (auto& t : threads_) t.join();
}

void WorkerPool::worker_loop() {
  std::uint64_t seen = 0;
  while (true) {
    const std::function<void(int)>* fn;
    int n;
    {
      std::unique_lock lk(mutex_);
      cv_start_.wait(lk, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      fn = fn_;
      n = n_tasks_;
    }
    for (int i = next_task_.fetch_add(1, std::memory_order_relaxed); i < n;
         i = next_task_.fetch_add(1, std::memory_order_relaxed))
      (*fn)(i);
    {
      std::lock_guard lk(mutex_);
      if (--active_ == 0) cv_done_.notify_one();
    }
  }
}

void WorkerPool::run(int n_tasks, const std::function<void(int)>& fn) {
  if (n_workers_ == 1 || n_tasks <= 1) {
    for (int i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  {
    std::lock_guard lk(mutex_);
    fn_ = &fn;
    n_tasks_ = n_tasks;
    next_task_.store(0, std::memory_order_relaxed);
    active_ = static_cast<int>(threads_.size());
    ++generation_;
  }
  cv_start_.notify_all();
  for (int i = next_task_.fetch_add(1, std::memory_order_relaxed); i < n_tasks;
       i = next_task_.fetch_add(1, std::memory_order_relaxed))
    fn(i);
  std::unique_lock lk(mutex_);
  cv_done_.wait(lk, [&] { return active_ == 0; });
  fn_ = nullptr;
}

// ------------------------------------------------------------------- the PEs

struct FabricEngine::InputPe {
  PeId id = 0;
  PeId target = 0;
  int width = 0;
  std::array<int, kNumInputs> steps{};
  bool started = false;

  void reset(const Sample& s, int total_steps) {
    steps = s.spike_steps;
    for (int k = 0; k < width; ++k)
      if (steps[k] < 0 || steps[k] >= total_steps)
        throw FabricError("input spike step " + std::to_string(steps[k]) +
                          " outside [0, T-1]");
    started = true;
  }

  void step(const PhaseClock& clk, std::span<const Packet> inbox,
            std::vector<Packet>& out) {
    if (!started) throw FabricError("input PE stepped before start signal");
    if (!inbox.empty())
      throw FabricError("input PE received unexpected packets");
    if (clk.phase() == Phase::forward && clk.tick < clk.total_steps)
      for (int k = 0; k < width; ++k)
        if (steps[k] == clk.tick)
          out.push_back({PacketKind::spike, id, target,
                         static_cast<std::uint32_t>(k), 0.0f});
  }
};

struct FabricEngine::LayerPe {
  PeId id = 0;
  PeId fwd_target = 0;
  PeId bwd_target = 0;
  bool has_bwd_target = false;  // layer 1 sends no upstream errors
  int width = 0;
  int pre_width = 0;
  int total_steps = 0;
  LayerParams params;
  AdjointVariant variant = AdjointVariant::exponential_euler;
  float eps_guard = 1e-6f;
  WeightMatrix weights;
  LayerState state;
  AdjointState adj;
  std::vector<std::uint8_t> presyn_raster;  // T x pre_width, row t = step t
  bool started = false;

  std::vector<std::uint32_t> presyn_now;
  std::vector<float> brackets;
  std::vector<std::uint8_t> bracket_seen;
  std::vector<float> errors_out;

  LayerPe(int w, int pw) : state(w), adj(w, pw) {}

  void reset(bool record_adjoints) {
    state.reset();
    adj.reset(true);
    adj.record = record_adjoints;
    if (record_adjoints) adj.begin_recording(total_steps);
    presyn_raster.assign(static_cast<std::size_t>(total_steps) * pre_width, 0);
    started = true;
  }

  void step(const PhaseClock& clk, std::span<const Packet> inbox,
            std::vector<Packet>& out) {
    if (!started) throw FabricError("layer PE stepped before start signal");
    switch (clk.phase()) {
      case Phase::forward: {
        const int f = clk.tick;
        if (f == 0) {
          if (!inbox.empty())
            throw FabricError("packets delivered before the first tick");
          break;
        }
        presyn_now.clear();
        for (const Packet& p : inbox) {
          if (p.kind != PacketKind::spike)
            throw FabricError("non-spike packet during forward phase");
          presyn_now.push_back(p.index);  // range-checked by forward_step
        }
        for (std::uint32_t k : presyn_now) {
          if (k >= static_cast<std::uint32_t>(pre_width))
            throw FabricError("spike index out of range");
          presyn_raster[static_cast<std::size_t>(f - 1) * pre_width + k] = 1;
        }
        const auto emitted = forward_step(state, params, weights, presyn_now);
        for (std::uint32_t j : emitted)
          out.push_back({PacketKind::spike, id, fwd_target, j, 0.0f});
        break;
      }
      case Phase::turnaround:
        // Last spikes (step T) arrive here and are received but not
        // processed; there is no step T+1.
        for (const Packet& p : inbox)
          if (p.kind != PacketKind::spike)
            throw FabricError("non-spike packet during turnaround");
        break;
      case Phase::backward: {
        const int b = clk.step();
        brackets.assign(width, 0.0f);
        bracket_seen.assign(width, 0);
        for (const Packet& p : inbox) {
          if (p.kind != PacketKind::error)
            throw FabricError("non-error packet during backward phase");
          if (p.index >= static_cast<std::uint32_t>(width))
            throw FabricError("error index out of range");
          if (bracket_seen[p.index])
            throw FabricError("duplicate error packet for one neuron");
          bracket_seen[p.index] = 1;
          brackets[p.index] = p.value;
        }
        presyn_now.clear();
        for (int k = 0; k < pre_width; ++k)
          if (presyn_raster[static_cast<std::size_t>(b) * pre_width + k])
            presyn_now.push_back(static_cast<std::uint32_t>(k));
        backward_step(adj, state, b, params, weights, variant, eps_guard,
                      brackets, presyn_now, errors_out);
        if (has_bwd_target && b >= 1)
          for (std::size_t i = 0; i < presyn_now.size(); ++i)
            out.push_back({PacketKind::error, id, bwd_target, presyn_now[i],
                           errors_out[i]});
        break;
      }
      case Phase::idle:
        break;
    }
  }
};

struct FabricEngine::LossPe {
  PeId id = 0;
  PeId bwd_target = 0;
  LossConfig cfg;
  FirstSpikeRecord rec{1};
  std::vector<ErrorEntry> errors;
  double loss = 0.0;
  int prediction = kAbstain;
  int silent = 0;
  bool started = false;

  void reset(int label) {
    rec = FirstSpikeRecord(cfg.n_classes, label);
    errors.clear();
    loss = 0.0;
    prediction = kAbstain;
    silent = 0;
    started = true;
  }

  void step(const PhaseClock& clk, std::span<const Packet> inbox,
            std::vector<Packet>& out) {
    if (!started) throw FabricError("loss PE stepped before start signal");
    switch (clk.phase()) {
      case Phase::forward:
      case Phase::turnaround:
        for (const Packet& p : inbox) {
          if (p.kind != PacketKind::spike)
            throw FabricError("non-spike packet reached loss during forward");
          record_spike(rec, static_cast<int>(p.index), clk.tick - 1, cfg);
        }
        if (clk.phase() == Phase::turnaround) {
          loss = compute_loss(rec, cfg);
          prediction = predict(rec);
          silent = silent_count(rec);
          errors = compute_error_signals(rec, cfg);
          emit_errors(cfg.total_steps, out);
        }
        break;
      case Phase::backward:
        if (!inbox.empty())
          throw FabricError("loss PE received packets during backward");
        emit_errors(clk.step(), out);
        break;
      case Phase::idle:
        break;
    }
  }

  // The error for a spike at step s is sent while the output layer works on
  // step s so that it arrives exactly when the layer applies the jump at s.
  void emit_errors(int step, std::vector<Packet>& out) {
    for (const ErrorEntry& e : errors)
      if (e.step == step)
        out.push_back({PacketKind::error, id, bwd_target,
                       static_cast<std::uint32_t>(e.neuron),
                       static_cast<float>(e.value)});
  }
};

// --------------------------------------------------------------- FabricEngine

FabricEngine::FabricEngine(const RunConfig& cfg, std::vector<WeightMatrix> weights)
    : cfg_(cfg), params_(cfg.layer_params()), loss_cfg_(cfg.loss_config()),
      topo_(build_topology(cfg.net_dims, cfg.batch_size)),
      master_weights_(std::move(weights)), pool_(cfg.workers) {
  if (static_cast<int>(master_weights_.size()) != cfg_.n_weight_layers())
    throw ConfigError("weight layer count does not match net_dims");
  for (int l = 0; l < cfg_.n_weight_layers(); ++l)
    if (master_weights_[l].n_in != cfg_.net_dims[l] ||
        master_weights_[l].n_out != cfg_.net_dims[l + 1])
      throw ConfigError("weight shape mismatch at layer " + std::to_string(l));
  if (cfg_.net_dims[0] > kNumInputs)
    throw ConfigError("input layer wider than the sample encoding");

  mailboxes_.resize(topo_.pe_count());
  const int n_layers = cfg_.n_weight_layers();
  for (int r = 0; r < cfg_.batch_size; ++r) {
    auto input = std::make_unique<InputPe>();
    input->id = topo_.input_pe(r);
    input->target = topo_.layer_pe(r, 1);
    input->width = cfg_.net_dims[0];
    inputs_.push_back(std::move(input));

    layers_.emplace_back();
    for (int l = 1; l <= n_layers; ++l) {
      auto pe = std::make_unique<LayerPe>(cfg_.net_dims[l], cfg_.net_dims[l - 1]);
      pe->id = topo_.layer_pe(r, l);
      pe->fwd_target = l == n_layers ? topo_.loss_pe(r) : topo_.layer_pe(r, l + 1);
      pe->has_bwd_target = l >= 2;
      pe->bwd_target = l >= 2 ? topo_.layer_pe(r, l - 1) : 0;
      pe->width = cfg_.net_dims[l];
      pe->pre_width = cfg_.net_dims[l - 1];
      pe->total_steps = cfg_.total_steps;
      pe->params = params_;
      pe->variant = cfg_.adjoint_variant;
      pe->eps_guard = cfg_.singularity_eps;
      pe->weights = master_weights_[l - 1];
      layers_.back().push_back(std::move(pe));
    }

    auto loss = std::make_unique<LossPe>();
    loss->id = topo_.loss_pe(r);
    loss->bwd_target = topo_.layer_pe(r, n_layers);
    loss->cfg = loss_cfg_;
    losses_.push_back(std::move(loss));
  }
}

FabricEngine::~FabricEngine() = default;

const std::vector<WeightMatrix>& FabricEngine::weights() const {
  return master_weights_;
}

void FabricEngine::set_weights(std::vector<WeightMatrix> w) {
  master_weights_ = std::move(w);
  scatter_weights();
}

const WeightMatrix& FabricEngine::replica_weights(int replica, int layer) const {
  return layers_.at(replica).at(layer)->weights;
}

void FabricEngine::reset_replicas(std::span<const Sample> samples) {
  for (Mailbox& mb : mailboxes_) {
    mb.pending.clear();
    mb.current.clear();
  }
  active_pes_.clear();
  const int n_layers = cfg_.n_weight_layers();
  for (int r = 0; r < static_cast<int>(samples.size()); ++r) {
    inputs_[r]->reset(samples[r], cfg_.total_steps);
    for (auto& pe : layers_[r]) pe->reset(recording_enabled_);
    losses_[r]->reset(samples[r].raw.label);
    active_pes_.push_back(topo_.input_pe(r));
    for (int l = 1; l <= n_layers; ++l) active_pes_.push_back(topo_.layer_pe(r, l));
    active_pes_.push_back(topo_.loss_pe(r));
  }
  outboxes_.assign(active_pes_.size(), {});
  if (trace_)
    for (PeId pe : active_pes_)
      *trace_ << "0 start " << topo_.control << ' ' << pe << " 0\n";
}

void FabricEngine::step_pe(int pe_list_index, const PhaseClock& clk) {
  const PeId id = active_pes_[pe_list_index];
  const Topology::PeInfo& info = topo_.pes[id];
  const std::span<const Packet> inbox(mailboxes_[id].current);
  std::vector<Packet>& out = outboxes_[pe_list_index];
  switch (info.kind) {
    case PeKind::input: inputs_[info.replica]->step(clk, inbox, out); break;
    case PeKind::layer:
      layers_[info.replica][info.layer - 1]->step(clk, inbox, out);
      break;
    case PeKind::loss: losses_[info.replica]->step(clk, inbox, out); break;
    case PeKind::control: break;
  }
}

void FabricEngine::debug_step_pe(PeId id, const PhaseClock& clk) {
  const Topology::PeInfo& info = topo_.pes.at(id);
  const std::span<const Packet> inbox(mailboxes_[id].current);
  std::vector<Packet> out;
  switch (info.kind) {
    case PeKind::input: inputs_[info.replica]->step(clk, inbox, out); break;
    case PeKind::layer:
      layers_[info.replica][info.layer - 1]->step(clk, inbox, out);
      break;
    case PeKind::loss: losses_[info.replica]->step(clk, inbox, out); break;
    case PeKind::control: break;
  }
}

void FabricEngine::route_outboxes(const PhaseClock& clk) {
  for (std::size_t i = 0; i < active_pes_.size(); ++i) {
    for (const Packet& p : outboxes_[i]) {
      topo_.check_route(p);
      mailboxes_[p.target].pending.push_back(p);
      if (trace_)
        *trace_ << clk.tick << ' ' << to_string(p.kind) << ' ' << p.source
                << ' ' << p.target << ' ' << p.index << '\n';
    }
    outboxes_[i].clear();
  }
}

void FabricEngine::run_sample_pipeline(int n_active) {
  PhaseClock clk{cfg_.total_steps, 0};
  const int budget = PhaseClock::budget(cfg_.total_steps);
  for (clk.tick = 0; clk.tick < budget; ++clk.tick) {
    if (debug_hook_) debug_hook_(*this, clk.tick);
    for (Mailbox& mb : mailboxes_) mb.deliver();
    pool_.run(static_cast<int>(active_pes_.size()),
              [&](int i) { step_pe(i, clk); });
    route_outboxes(clk);
  }
  ticks_last_sample_ = budget;
  for (std::size_t id = 0; id < mailboxes_.size(); ++id)
    if (!mailboxes_[id].pending.empty())
      throw FabricError("undelivered packets at sample end (PE " +
                        std::to_string(id) + ")");
  (void)n_active;
}

GradientSet FabricEngine::gather_gradients(int replica) const {
  GradientSet g;
  for (const auto& pe : layers_[replica]) g.layers.push_back(pe->adj.grad);
  return g;
}

void FabricEngine::scatter_weights() {
  for (auto& replica : layers_)
    for (std::size_t l = 0; l < replica.size(); ++l)
      replica[l]->weights = master_weights_[l];
}

BatchStats FabricEngine::train_batch(std::span<const Sample> samples,
                                     AdamState& adam) {
  if (samples.empty()) throw ConfigError("empty batch");
  if (static_cast<int>(samples.size()) > cfg_.batch_size)
    throw ConfigError("batch larger than configured batch_size");
  const int n_active = static_cast<int>(samples.size());

  reset_replicas(samples);
  run_sample_pipeline(n_active);

  BatchStats stats;
  stats.ticks_per_sample = ticks_last_sample_;
  recording_.samples.clear();
  recording_.post_weights.clear();
  for (int r = 0; r < n_active; ++r) {
    const LossPe& loss = *losses_[r];
    stats.samples.push_back(
        {loss.loss, loss.prediction, samples[r].raw.label, loss.silent});
    for (const auto& pe : layers_[r]) stats.guard_hits += pe->adj.guard_hits;
  }

  std::vector<GradientSet> replica_grads;
  replica_grads.reserve(n_active);
  for (int r = 0; r < n_active; ++r) replica_grads.push_back(gather_gradients(r));
  const GradientSet combined = combine(replica_grads, cfg_.optim.reduction);
  adam_step(adam, combined, master_weights_);
  scatter_weights();

  if (recording_enabled_) {
    for (int r = 0; r < n_active; ++r) {
      SampleRec rec;
      for (const auto& pe : layers_[r]) {
        LayerRec lr;
        lr.n = pe->width;
        lr.n_pre = pe->pre_width;
        lr.i_trace = pe->state.i_trace;
        lr.v_trace = pe->state.v_trace;
        lr.raster = pe->state.raster;
        lr.lambda_trace = pe->adj.lambda_trace;
        lr.mu_trace = pe->adj.mu_trace;
        lr.grad = pe->adj.grad;
        rec.layers.push_back(std::move(lr));
      }
      rec.first_steps = losses_[r]->rec.first_step;
      recording_.samples.push_back(std::move(rec));
    }
    recording_.post_weights = master_weights_;
  }

  if (trace_) {
    const int last_tick = PhaseClock::budget(cfg_.total_steps) - 1;
    for (PeId pe : active_pes_)
      *trace_ << last_tick << " done " << pe << ' ' << topo_.control << " 0\n";
  }
  return stats;
}

}  // namespace spikefab
