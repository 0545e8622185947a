#include "spikefab/packet.hpp"

namespace spikefab {

const char* to_string(PacketKind k) {
  switch (k) {
    case PacketKind::spike: return "spike";
    case PacketKind::error: return "error";
    case PacketKind::start: return "start";
    case PacketKind::done: return "done";
  }
  return "?";
}

void Topology::check_route(const Packet& p) const {
  if (p.source >= pe_count() || p.target >= pe_count())
    throw FabricError("packet references unknown PE " +
                      std::to_string(std::max(p.source, p.target)));
  if (p.kind == PacketKind::start || p.kind == PacketKind::done) {
    const bool ok = p.kind == PacketKind::start ? p.source == control
                                                : p.target == control;
    if (!ok) throw FabricError("misdirected control packet");
    return;
  }
  const auto& routes =
      p.kind == PacketKind::spike ? fwd_route[p.source] : bwd_route[p.source];
  if (std::find(routes.begin(), routes.end(), p.target) == routes.end())
    throw FabricError("unroutable " + std::string(to_string(p.kind)) +
                      " packet " + std::to_string(p.source) + " -> " +
                      std::to_string(p.target));
}

Topology build_topology(std::span<const int> net_dims, int batch_size) {
  if (net_dims.size() < 2)
    throw ConfigError("net_dims needs at least an input and an output layer");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  Topology t;
  t.batch_size = batch_size;
  t.n_layers = static_cast<int>(net_dims.size()) - 1;
  const std::size_t count = 1 + static_cast<std::size_t>(batch_size) * (t.n_layers + 2);
  t.pes.resize(count);
  t.fwd_route.resize(count);
  t.bwd_route.resize(count);
  t.pes[0] = {PeKind::control, -1, 0};
  for (int r = 0; r < batch_size; ++r) {
    t.pes[t.input_pe(r)] = {PeKind::input, r, 0};
    for (int l = 1; l <= t.n_layers; ++l)
      t.pes[t.layer_pe(r, l)] = {PeKind::layer, r, l};
    t.pes[t.loss_pe(r)] = {PeKind::loss, r, 0};

    t.fwd_route[t.input_pe(r)] = {t.layer_pe(r, 1)};
    for (int l = 1; l < t.n_layers; ++l)
      t.fwd_route[t.layer_pe(r, l)] = {t.layer_pe(r, l + 1)};
    t.fwd_route[t.layer_pe(r, t.n_layers)] = {t.loss_pe(r)};

    t.bwd_route[t.loss_pe(r)] = {t.layer_pe(r, t.n_layers)};
    for (int l = t.n_layers; l >= 2; --l)
      t.bwd_route[t.layer_pe(r, l)] = {t.layer_pe(r, l - 1)};
    t.bwd_route[t.layer_pe(r, 1)] = {t.input_pe(r)};
  }
  return t;
}

}  // namespace spikefab
