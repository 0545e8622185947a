#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spikefab/common.hpp"

namespace spikefab {

using PeId = std::uint32_t;

enum class PacketKind : std::uint8_t { spike, error, start, done };

const char* to_string(PacketKind k);

// One fabric message, modelled after a (key, payload) NoC packet: `index`
// is the routing key (neuron index), `value` the 32-bit payload carried by
// error packets. Spike packets use only the index; control packets neither.
struct Packet {
  PacketKind kind;
  PeId source = 0;
  PeId target = 0;
  std::uint32_t index = 0;
  float value = 0.0f;
};

// Packets sent at tick t become consumable at tick t+1. Consumption order is
// normalized by (source, index) so worker scheduling cannot influence it.
struct Mailbox {
  std::vector<Packet> pending;
  std::vector<Packet> current;

  void deliver() {
    current = std::move(pending);
    pending.clear();
    std::sort(current.begin(), current.end(), [](const Packet& a, const Packet& b) {
      return a.source != b.source ? a.source < b.source : a.index < b.index;
    });
  }
};

enum class PeKind : std::uint8_t { control, input, layer, loss };

// Logical processing elements of one chip: per replica an input injector,
// one PE per network layer and one loss PE, plus a single control node.
struct Topology {
  struct PeInfo {
    PeKind kind;
    int replica = -1;
    int layer = 0;  // 1..n_layers for layer PEs
  };

  int batch_size = 0;
  int n_layers = 0;
  PeId control = 0;
  std::vector<PeInfo> pes;                   // indexed by PeId
  std::vector<std::vector<PeId>> fwd_route;  // spike routes
  std::vector<std::vector<PeId>> bwd_route;  // error routes

  std::size_t pe_count() const { return pes.size(); }
  PeId input_pe(int replica) const {
    return static_cast<PeId>(1 + replica * (n_layers + 2));
  }
  PeId layer_pe(int replica, int layer) const {  // layer in [1, n_layers]
    return static_cast<PeId>(1 + replica * (n_layers + 2) + layer);
  }
  PeId loss_pe(int replica) const {
    return static_cast<PeId>(1 + replica * (n_layers + 2) + n_layers + 1);
  }

  // Throws FabricError when the packet's kind has no route source -> target.
  void check_route(const Packet& p) const;
};

Topology build_topology(std::span<const int> net_dims, int batch_size);

enum class Phase : std::uint8_t { forward, turnaround, backward, idle };

// Fixed per-sample schedule: forward ticks 0..T, one turnaround tick,
// backward ticks mapping to steps T-1..0; 2T+2 ticks total.
struct PhaseClock {
  int total_steps = 0;  // T
  int tick = 0;         // 0 .. 2T+1

  static int budget(int total_steps) { return 2 * total_steps + 2; }

  Phase phase() const {
    if (tick <= total_steps) return Phase::forward;
    if (tick == total_steps + 1) return Phase::turnaround;
    if (tick < budget(total_steps)) return Phase::backward;
    return Phase::idle;
  }
  // Forward step f = tick; backward step b = 2T+1 - tick.
  int step() const {
    return phase() == Phase::backward ? 2 * total_steps + 1 - tick : tick;
  }
};

}  // namespace spikefab
