#include "chaos/netsim.hpp"

#include <algorithm>
#include <queue>
#include <set>

#include <fmt/format.h>

#include "chaos/error.hpp"

namespace chaos {

bool Packet::is_request() const {
  if (transport == Transport::ICMP) return has(Flag::Echo);
  if (has(Flag::Rst) || has(Flag::Ack)) return false;
  return transport == Transport::UDP || has(Flag::Syn);
}

std::string flags_to_string(std::uint8_t flags) {
  static constexpr std::pair<Flag, char> kLetters[] = {
      {Flag::Syn, 'S'},  {Flag::Ack, 'A'},       {Flag::Rst, 'R'},        {Flag::Fin, 'F'},
      {Flag::Echo, 'E'}, {Flag::EchoReply, 'e'}, {Flag::Unreachable, 'U'},
  };
  std::string out;
  for (auto [f, c] : kLetters)
    if (flags & static_cast<std::uint8_t>(f)) out.push_back(c);
  return out.empty() ? "-" : out;
}

std::string Packet::describe() const {
  return fmt::format("#{} {}:{}>{}:{} {} {} ttl={}{} tag={}", id, src.to_string(), src_port,
                     dst.to_string(), dst_port, to_string(transport), flags_to_string(flags), ttl,
                     virtualized ? " v" : "", payload_tag.empty() ? "-" : payload_tag);
}

std::string_view to_string(FateKind k) {
  switch (k) {
    case FateKind::Delivered: return "delivered";
    case FateKind::DroppedTtl: return "dropped_ttl";
    case FateKind::DroppedPolicy: return "dropped_policy";
    case FateKind::AbsorbedByDecoy: return "absorbed_by_decoy";
    case FateKind::AnsweredSynthetically: return "answered_synthetically";
  }
  return "?";
}

bool FlowMatch::matches(const Packet& p) const {
  return (!src || *src == p.src) && (!dst || *dst == p.dst) &&
         (!transport || *transport == p.transport) && (!dst_port || *dst_port == p.dst_port);
}

MatchResult match_packet(Switch& sw, const Packet& packet, Tick now) {
  for (auto& e : sw.flow_table) {
    if (e.match.matches(packet)) {
      e.packet_count += 1;
      e.byte_count += packet.size_bytes();
      e.last_used = now;
      return e.actions;
    }
  }
  return TableMiss{};
}

void install_flow(Switch& sw, FlowEntry entry) {
  auto pos = std::find_if(sw.flow_table.begin(), sw.flow_table.end(),
                          [&](const FlowEntry& e) { return e.priority < entry.priority; });
  sw.flow_table.insert(pos, std::move(entry));
}

// ---------------------------------------------------------------------------

Network::Network(NetworkOptions options) : options_(options) {}

void Network::add_switch(const SwitchId& id) {
  if (switches_.count(id)) throw Error(ErrorCode::ConfigError, "duplicate switch", id);
  switches_.emplace(id, Switch{id, {}, {}});
  routes_dirty_ = true;
}

Switch& Network::switch_mut(const SwitchId& id) {
  auto it = switches_.find(id);
  if (it == switches_.end()) throw Error(ErrorCode::UnknownSwitch, "no such switch", id);
  return it->second;
}

const Switch& Network::switch_at(const SwitchId& id) const {
  auto it = switches_.find(id);
  if (it == switches_.end()) throw Error(ErrorCode::UnknownSwitch, "no such switch", id);
  return it->second;
}

std::vector<SwitchId> Network::switch_ids() const {
  std::vector<SwitchId> out;
  for (const auto& [id, _] : switches_) out.push_back(id);
  return out;
}

namespace {
int next_free_port(const Switch& sw) {
  return sw.ports.empty() ? 1 : sw.ports.rbegin()->first + 1;
}
}  // namespace

void Network::add_link(const SwitchId& a, const SwitchId& b) {
  auto& sa = switch_mut(a);
  auto& sb = switch_mut(b);
  const int pa = next_free_port(sa);
  const int pb = next_free_port(sb);
  sa.ports[pa] = PortPeer{PortPeer::Kind::Switch, b, pb};
  sb.ports[pb] = PortPeer{PortPeer::Kind::Switch, a, pa};
  routes_dirty_ = true;
}

void Network::add_host(const HostProfile& host) {
  if (hosts_.count(host.host_id)) throw Error(ErrorCode::DuplicateHost, "duplicate host", host.host_id);
  if (by_address_.count(host.real_address))
    throw Error(ErrorCode::ConfigError, "duplicate address", host.host_id);
  auto& sw = switch_mut(host.attachment);
  const int port = next_free_port(sw);
  sw.ports[port] = PortPeer{PortPeer::Kind::Host, host.host_id, 0};
  hosts_.emplace(host.host_id, HostState{host, port, {}});
  by_address_.emplace(host.real_address, host.host_id);
}

void Network::set_controller(Controller* controller) {
  controller_ = controller;
  if (controller_) {
    const auto before = counters_;
    controller_->on_start(*this);
    // Start-up provisioning is configuration, not runtime controller work.
    counters_.flow_mods = before.flow_mods;
    counters_.packet_outs = before.packet_outs;
  }
}

const HostProfile& Network::host(const HostId& id) const {
  auto it = hosts_.find(id);
  if (it == hosts_.end()) throw Error(ErrorCode::UnknownHost, "no such host", id);
  return it->second.profile;
}

std::optional<HostId> Network::host_at(Address address) const {
  auto it = by_address_.find(address);
  if (it == by_address_.end()) return std::nullopt;
  return it->second;
}

std::vector<HostId> Network::host_ids() const {
  std::vector<HostId> out;
  for (const auto& [id, _] : hosts_) out.push_back(id);
  return out;
}

int Network::host_port(const HostId& id) const {
  auto it = hosts_.find(id);
  if (it == hosts_.end()) throw Error(ErrorCode::UnknownHost, "no such host", id);
  return it->second.port;
}

std::vector<Packet> Network::take_inbox(const HostId& id) {
  auto it = hosts_.find(id);
  if (it == hosts_.end()) throw Error(ErrorCode::UnknownHost, "no such host", id);
  return std::exchange(it->second.inbox, {});
}

std::optional<PacketFate> Network::fate(std::uint64_t packet_id) const {
  auto it = fates_.find(packet_id);
  if (it == fates_.end()) return std::nullopt;
  return it->second;
}

void Network::record(const std::string& line) {
  trace_hash_ = hash_combine(trace_hash_, hash_string(line));
  if (options_.record_trace) trace_.push_back(line);
}

void Network::log(std::string line) { record(fmt::format("{} {}", now_, line)); }

void Network::set_fate(std::uint64_t id, FateKind kind, HostId host) {
  fates_[id] = PacketFate{kind, std::move(host), now_};
}

// ---------------------------------------------------------------------------
// Routing

void Network::compute_routes() const {
  next_hop_.clear();
  // BFS from every destination switch; neighbours visited in port order.
  for (const auto& [dest, _] : switches_) {
    std::map<SwitchId, std::pair<SwitchId, int>> parent;  // node -> (towards dest, port on node)
    std::queue<SwitchId> frontier;
    frontier.push(dest);
    std::set<SwitchId> seen{dest};
    while (!frontier.empty()) {
      auto cur = frontier.front();
      frontier.pop();
      for (const auto& [port, peer] : switches_.at(cur).ports) {
        if (peer.kind != PortPeer::Kind::Switch || seen.count(peer.peer)) continue;
        seen.insert(peer.peer);
        next_hop_[{peer.peer, dest}] = peer.peer_port;
        frontier.push(peer.peer);
      }
    }
  }
  routes_dirty_ = false;
}

std::optional<int> Network::route_port(const SwitchId& sw, Address real_dst) const {
  auto host_it = by_address_.find(real_dst);
  if (host_it == by_address_.end()) return std::nullopt;
  const auto& state = hosts_.at(host_it->second);
  if (state.profile.attachment == sw) return state.port;
  if (routes_dirty_) compute_routes();
  auto it = next_hop_.find({sw, state.profile.attachment});
  if (it == next_hop_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Controller-facing operations

void Network::install_flow(const SwitchId& sw_id, FlowEntry entry) {
  auto& sw = switch_mut(sw_id);
  entry.last_used = now_;
  counters_.flow_mods += 1;
  record(fmt::format("{} flow_mod {} add prio={} cookie={}", now_, sw_id, entry.priority,
                     entry.cookie.empty() ? "-" : entry.cookie));
  if (options_.record_trace) controller_log_.push_back(FlowMod{sw_id, entry, false});
  chaos::install_flow(sw, std::move(entry));
}

std::size_t Network::remove_flows(const SwitchId& sw_id, const std::string& cookie) {
  auto& sw = switch_mut(sw_id);
  const auto before = sw.flow_table.size();
  std::erase_if(sw.flow_table, [&](const FlowEntry& e) { return e.cookie == cookie; });
  const auto removed = before - sw.flow_table.size();
  if (removed) {
    counters_.flow_mods += 1;
    record(fmt::format("{} flow_mod {} del cookie={} n={}", now_, sw_id, cookie, removed));
    if (options_.record_trace) {
      FlowEntry e;
      e.cookie = cookie;
      controller_log_.push_back(FlowMod{sw_id, e, true});
    }
  }
  return removed;
}

void Network::packet_out(const SwitchId& sw_id, int port, Packet packet) {
  const auto& sw = switch_mut(sw_id);
  if (!sw.ports.count(port))
    throw Error(ErrorCode::UnknownPort, "no port " + std::to_string(port), sw_id);
  counters_.packet_outs += 1;
  record(fmt::format("{} packet_out {} {} {}", now_, sw_id, port, packet.describe()));
  if (options_.record_trace) controller_log_.push_back(PacketOut{sw_id, port, packet});
  transmit(sw_id, port, std::move(packet), /*same_tick=*/false);
}

void Network::drop(const Packet& packet, FateKind reason) {
  record(fmt::format("{} drop {} {}", now_, to_string(reason), packet.describe()));
  set_fate(packet.id, reason);
}

void Network::answer(const Packet& request, Packet reply, const SwitchId& sw, int port) {
  set_fate(request.id, FateKind::AnsweredSynthetically);
  reply.id = next_packet_id();
  counters_.injected += 1;
  record(fmt::format("{} synth {} for #{}", now_, reply.describe(), request.id));
  packet_out(sw, port, std::move(reply));
}

// ---------------------------------------------------------------------------
// Tick loop

std::uint64_t Network::send(const HostId& from, Packet packet) {
  const auto& state = hosts_.at(from);
  packet.id = next_packet_id();
  counters_.injected += 1;
  if (packet.is_request()) {
    connections_[{packet.src, packet.src_port}] = ConnectionStat{now_, {}, 0};
  }
  record(fmt::format("{} send {} {}", now_, from, packet.describe()));
  const auto id = packet.id;
  next_arrivals_.push_back({state.profile.attachment, state.port, std::move(packet)});
  return id;
}

bool Network::idle() const {
  return next_arrivals_.empty() && next_deliveries_.empty() && pending_packet_ins_.empty();
}

void Network::run(Tick ticks) {
  for (Tick i = 0; i < ticks; ++i) step();
}

void Network::step() {
  ++now_;
  if (controller_) controller_->on_tick(*this);

  for (auto& [id, sw] : switches_) {
    std::erase_if(sw.flow_table, [&](const FlowEntry& e) {
      const bool expired = e.idle_timeout > 0 && now_ - e.last_used >= e.idle_timeout;
      if (expired) record(fmt::format("{} flow_expired {} cookie={}", now_, id, e.cookie));
      return expired;
    });
  }

  auto deliveries = std::exchange(next_deliveries_, {});
  for (auto& d : deliveries) deliver(d.host, std::move(d.packet));

  auto arrivals = std::exchange(next_arrivals_, {});
  for (auto& a : arrivals) process_at_switch(a.sw, a.in_port, std::move(a.packet));

  while (!pending_packet_ins_.empty()) {
    auto event = std::move(pending_packet_ins_.front());
    pending_packet_ins_.pop_front();
    controller_->on_packet_in(*this, event);
  }
}

void Network::process_at_switch(const SwitchId& sw_id, int in_port, Packet p) {
  auto& sw = switches_.at(sw_id);
  if (--p.ttl <= 0) {
    record(fmt::format("{} ttl_error {} {}", now_, sw_id, p.describe()));
    set_fate(p.id, FateKind::DroppedTtl);
    return;
  }

  if (p.virtualized && translator_) {
    try {
      const auto real_dst = translator_->real_destination(p);
      auto host_it = by_address_.find(real_dst);
      if (host_it != by_address_.end() && hosts_.at(host_it->second).profile.attachment == sw_id)
        translator_->to_real(p);
    } catch (const Error&) {
      drop(p, FateKind::DroppedPolicy);
      return;
    }
  }

  const auto& peer = sw.ports.at(in_port);
  if (peer.kind == PortPeer::Kind::Host && tap_) tap_(peer.peer, p, now_);

  auto result = match_packet(sw, p, now_);
  if (std::holds_alternative<TableMiss>(result)) {
    if (!controller_) {
      drop(p, FateKind::DroppedPolicy);
      return;
    }
    execute(sw, in_port, std::move(p), {SendToController{}});
    return;
  }
  execute(sw, in_port, std::move(p), std::get<std::vector<FlowAction>>(result));
}

void Network::execute(Switch& sw, int in_port, Packet p, const std::vector<FlowAction>& actions) {
  for (const auto& action : actions) {
    if (auto* a = std::get_if<RewriteSrc>(&action)) {
      p.src = a->address;
    } else if (auto* a = std::get_if<RewriteDst>(&action)) {
      p.dst = a->address;
    } else if (auto* a = std::get_if<Output>(&action)) {
      transmit(sw.id, a->port, std::move(p), /*same_tick=*/true);
      return;
    } else if (std::holds_alternative<Normal>(action)) {
      std::optional<int> port;
      try {
        const Address dst = p.virtualized && translator_ ? translator_->real_destination(p) : p.dst;
        port = route_port(sw.id, dst);
      } catch (const Error&) {
      }
      if (!port) {
        drop(p, FateKind::DroppedPolicy);
        return;
      }
      transmit(sw.id, *port, std::move(p), /*same_tick=*/true);
      return;
    } else if (std::holds_alternative<SendToController>(action)) {
      if (!controller_) break;
      counters_.packet_ins += 1;
      const auto key = p.is_request() ? std::pair{p.src, p.src_port} : std::pair{p.dst, p.dst_port};
      if (auto it = connections_.find(key); it != connections_.end()) it->second.packet_ins += 1;
      record(fmt::format("{} packet_in {} {} {}", now_, sw.id, in_port, p.describe()));
      PacketIn event{sw.id, in_port, std::move(p)};
      if (options_.record_trace) controller_log_.push_back(event);
      pending_packet_ins_.push_back(std::move(event));
      return;
    } else if (std::holds_alternative<DropAction>(action)) {
      break;
    }
  }
  drop(p, FateKind::DroppedPolicy);
}

void Network::transmit(const SwitchId& sw_id, int port, Packet p, bool same_tick) {
  const auto& sw = switches_.at(sw_id);
  auto it = sw.ports.find(port);
  if (it == sw.ports.end()) throw Error(ErrorCode::UnknownPort, "no port " + std::to_string(port), sw_id);
  const auto& peer = it->second;
  if (peer.kind == PortPeer::Kind::Host) {
    if (same_tick) {
      deliver(peer.peer, std::move(p));
    } else {
      next_deliveries_.push_back({peer.peer, std::move(p)});
    }
    return;
  }
  if (translator_ && !p.virtualized) {
    try {
      translator_->to_virtual(p, now_);
    } catch (const Error&) {
      drop(p, FateKind::DroppedPolicy);
      return;
    }
  }
  next_arrivals_.push_back({peer.peer, peer.peer_port, std::move(p)});
}

void Network::deliver(const HostId& host_id, Packet p) {
  auto& state = hosts_.at(host_id);
  const bool decoy = state.profile.is_decoy;
  set_fate(p.id, decoy ? FateKind::AbsorbedByDecoy : FateKind::Delivered, host_id);
  record(fmt::format("{} deliver {} {}", now_, host_id, p.describe()));

  if (!p.is_request()) {
    if (auto it = connections_.find({p.dst, p.dst_port});
        it != connections_.end() && !it->second.answered) {
      it->second.answered = now_;
    }
  }

  constexpr std::string_view kExploit = "exploit:";
  if (p.is_request() && p.payload_tag.starts_with(kExploit)) {
    const auto vuln = p.payload_tag.substr(kExploit.size());
    if (decoy) {
      host_events_.push_back({HostEvent::Kind::DecoyAlert, host_id, p.src, vuln, now_, p.id});
      record(fmt::format("{} decoy_alert {} from={} vuln={}", now_, host_id, p.src.to_string(), vuln));
    } else if (state.profile.has_vulnerability(vuln)) {
      host_events_.push_back({HostEvent::Kind::Compromised, host_id, p.src, vuln, now_, p.id});
      record(fmt::format("{} compromised {} from={} vuln={}", now_, host_id, p.src.to_string(), vuln));
    }
  }

  auto reply = host_reply(state, p);
  state.inbox.push_back(std::move(p));
  if (reply) send(host_id, std::move(*reply));
}

std::optional<Packet> Network::host_reply(const HostState& host, const Packet& p) {
  if (!p.is_request()) return std::nullopt;
  Packet r;
  r.src = host.profile.real_address;
  r.dst = p.src;
  r.src_port = p.dst_port;
  r.dst_port = p.src_port;
  r.transport = p.transport;

  if (p.transport == Transport::ICMP) {
    r.flags = static_cast<std::uint8_t>(Flag::EchoReply);
    r.payload_tag = p.payload_tag;
    return r;
  }

  const auto* svc = host.profile.find_service(p.transport, p.dst_port);
  if (!svc) {
    if (p.transport == Transport::UDP) {
      r.transport = Transport::ICMP;
      r.flags = static_cast<std::uint8_t>(Flag::Unreachable);
    } else {
      r.flags = Flag::Rst | Flag::Ack;
    }
    return r;
  }

  if (p.payload_tag.empty()) {
    r.flags = p.transport == Transport::TCP ? (Flag::Syn | Flag::Ack) : static_cast<std::uint8_t>(Flag::Ack);
  } else {
    r.flags = static_cast<std::uint8_t>(Flag::Ack);
    if (p.payload_tag == "banner-request") {
      r.payload_tag = "banner:" + svc->banner;
    } else if (p.payload_tag.starts_with("exploit:")) {
      r.payload_tag = "exploit:received";
    } else {
      r.payload_tag = "reply:" + p.payload_tag;
    }
  }
  return r;
}

}  // namespace chaos
