#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "chaos/address.hpp"
#include "chaos/tower.hpp"

namespace chaos {

enum class Flag : std::uint8_t {
  Syn = 1 << 0,
  Ack = 1 << 1,
  Rst = 1 << 2,
  Fin = 1 << 3,
  Echo = 1 << 4,
  EchoReply = 1 << 5,
  Unreachable = 1 << 6,
};

constexpr std::uint8_t operator|(Flag a, Flag b) {
  return static_cast<std::uint8_t>(a) | static_cast<std::uint8_t>(b);
}
constexpr std::uint8_t operator|(std::uint8_t a, Flag b) { return a | static_cast<std::uint8_t>(b); }

constexpr int kDefaultTtl = 64;

struct Packet {
  std::uint64_t id = 0;
  Address src;
  Address dst;
  Transport transport = Transport::TCP;
  // ICMP echo/unreachable carry the echo identifier in the port fields.
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t flags = 0;
  int ttl = kDefaultTtl;
  std::string payload_tag;
  // Set while the packet carries virtual addresses between edge switches.
  bool virtualized = false;

  bool has(Flag f) const { return (flags & static_cast<std::uint8_t>(f)) != 0; }
  /// Sent by the side that opened the exchange (probe, request or exploit).
  bool is_request() const;
  std::size_t size_bytes() const { return 64 + payload_tag.size(); }
  std::string describe() const;

  friend bool operator==(const Packet&, const Packet&) = default;
};

std::string flags_to_string(std::uint8_t flags);

// ---------------------------------------------------------------------------
// Flow tables

struct FlowMatch {
  std::optional<Address> src;
  std::optional<Address> dst;
  std::optional<Transport> transport;
  std::optional<std::uint16_t> dst_port;

  bool matches(const Packet& p) const;
};

struct RewriteSrc { Address address; };
struct RewriteDst { Address address; };
struct Output { int port = 0; };
struct SendToController {};
struct DropAction {};
/// Forward along the shortest path toward the packet's (real) destination.
struct Normal {};

using FlowAction = std::variant<RewriteSrc, RewriteDst, Output, SendToController, DropAction, Normal>;

struct FlowEntry {
  FlowMatch match;
  int priority = 0;
  std::vector<FlowAction> actions;
  std::uint64_t packet_count = 0;
  std::uint64_t byte_count = 0;
  Tick idle_timeout = 0;  // 0 = permanent
  std::string cookie;
  Tick last_used = 0;
};

struct PortPeer {
  enum class Kind { Host, Switch } kind = Kind::Host;
  std::string peer;  // host id or switch id
  int peer_port = 0;
};

struct Switch {
  SwitchId id;
  std::vector<FlowEntry> flow_table;  // descending priority, stable by install order
  std::map<int, PortPeer> ports;
};

struct TableMiss {};
using MatchResult = std::variant<std::vector<FlowAction>, TableMiss>;

/// Highest-priority match wins; ties go to the first-installed entry.
MatchResult match_packet(Switch& sw, const Packet& packet, Tick now = 0);

/// Inserts after every entry of equal or higher priority.
void install_flow(Switch& sw, FlowEntry entry);

// ---------------------------------------------------------------------------
// Controller channel

struct PacketIn {
  SwitchId switch_id;
  int in_port = 0;
  Packet packet;
};
struct FlowMod {
  SwitchId switch_id;
  FlowEntry entry;
  bool remove = false;
};
struct PacketOut {
  SwitchId switch_id;
  int out_port = 0;
  Packet packet;
};
using ControllerEvent = std::variant<PacketIn, FlowMod, PacketOut>;

class Network;

class Controller {
 public:
  virtual ~Controller() = default;
  virtual void on_start(Network&) {}
  /// Runs at the start of each tick, before packets move.
  virtual void on_tick(Network&) {}
  virtual void on_packet_in(Network& net, const PacketIn& event) = 0;
};

/// Edge address rewriting hook (host mutation). Packets are translated when
/// they leave their ingress switch and restored at the destination's switch.
class AddressTranslator {
 public:
  virtual ~AddressTranslator() = default;
  virtual void to_virtual(Packet& p, Tick now) = 0;
  virtual Address real_destination(const Packet& p) const = 0;
  virtual void to_real(Packet& p) = 0;
};

// ---------------------------------------------------------------------------
// Packet accounting

enum class FateKind {
  Delivered,
  DroppedTtl,
  DroppedPolicy,
  AbsorbedByDecoy,
  AnsweredSynthetically,
};

std::string_view to_string(FateKind k);

struct PacketFate {
  FateKind kind = FateKind::Delivered;
  HostId host;  // receiving host for Delivered / AbsorbedByDecoy
  Tick tick = 0;
};

struct NetCounters {
  std::uint64_t injected = 0;
  std::uint64_t packet_ins = 0;
  std::uint64_t flow_mods = 0;
  std::uint64_t packet_outs = 0;

  std::uint64_t controller_ops() const { return packet_ins + flow_mods + packet_outs; }
};

struct ConnectionStat {
  Tick opened = 0;
  std::optional<Tick> answered;
  std::uint32_t packet_ins = 0;
};

struct HostEvent {
  enum class Kind { DecoyAlert, Compromised } kind;
  HostId host;
  Address from;
  std::string vuln_id;
  Tick tick = 0;
  std::uint64_t packet_id = 0;
};

struct NetworkOptions {
  bool record_trace = false;
};

class Network {
 public:
  explicit Network(NetworkOptions options = {});

  // Topology
  void add_switch(const SwitchId& id);
  void add_link(const SwitchId& a, const SwitchId& b);
  void add_host(const HostProfile& host);

  void set_controller(Controller* controller);
  void set_translator(AddressTranslator* translator) { translator_ = translator; }
  using Tap = std::function<void(const HostId& from, const Packet&, Tick)>;
  /// Observes every packet entering the fabric from a host port.
  void set_tap(Tap tap) { tap_ = std::move(tap); }

  // Simulation
  Tick now() const { return now_; }
  /// Host hands a packet to its switch; processed on the next tick.
  std::uint64_t send(const HostId& from, Packet packet);
  void step();
  void run(Tick ticks);
  bool idle() const;

  // Controller-facing operations
  void install_flow(const SwitchId& sw, FlowEntry entry);
  std::size_t remove_flows(const SwitchId& sw, const std::string& cookie);
  void packet_out(const SwitchId& sw, int port, Packet packet);
  void drop(const Packet& packet, FateKind reason);
  /// Consumes `request` and sends `reply` out of `port` in its place.
  void answer(const Packet& request, Packet reply, const SwitchId& sw, int port);
  std::optional<int> route_port(const SwitchId& sw, Address real_dst) const;
  void log(std::string line);

  // Queries
  const Switch& switch_at(const SwitchId& id) const;
  std::vector<SwitchId> switch_ids() const;
  const HostProfile& host(const HostId& id) const;
  std::optional<HostId> host_at(Address address) const;
  std::vector<HostId> host_ids() const;
  int host_port(const HostId& id) const;
  std::vector<Packet> take_inbox(const HostId& id);
  std::optional<PacketFate> fate(std::uint64_t packet_id) const;
  const std::unordered_map<std::uint64_t, PacketFate>& fates() const { return fates_; }
  const NetCounters& counters() const { return counters_; }
  const std::map<std::pair<Address, std::uint16_t>, ConnectionStat>& connections() const {
    return connections_;
  }
  const std::vector<HostEvent>& host_events() const { return host_events_; }
  const std::vector<std::string>& trace() const { return trace_; }
  const std::vector<ControllerEvent>& controller_log() const { return controller_log_; }
  std::uint64_t trace_hash() const { return trace_hash_; }

 private:
  struct Arrival {
    SwitchId sw;
    int in_port;
    Packet packet;
  };
  struct HostDelivery {
    HostId host;
    Packet packet;
  };
  struct HostState {
    HostProfile profile;
    int port = 0;
    std::vector<Packet> inbox;
  };

  Switch& switch_mut(const SwitchId& id);
  void compute_routes() const;
  void process_at_switch(const SwitchId& sw, int in_port, Packet p);
  void execute(Switch& sw, int in_port, Packet p, const std::vector<FlowAction>& actions);
  void transmit(const SwitchId& sw, int port, Packet p, bool same_tick);
  void deliver(const HostId& host, Packet p);
  std::optional<Packet> host_reply(const HostState& host, const Packet& p);
  void set_fate(std::uint64_t id, FateKind kind, HostId host = {});
  void record(const std::string& line);
  std::uint64_t next_packet_id() { return ++last_packet_id_; }

  NetworkOptions options_;
  Tick now_ = 0;
  std::map<SwitchId, Switch> switches_;
  std::map<HostId, HostState> hosts_;
  std::map<Address, HostId> by_address_;
  Controller* controller_ = nullptr;
  AddressTranslator* translator_ = nullptr;
  Tap tap_;

  std::vector<Arrival> next_arrivals_;
  std::vector<HostDelivery> next_deliveries_;
  std::deque<PacketIn> pending_packet_ins_;

  mutable bool routes_dirty_ = true;
  // (switch, destination switch) -> out port
  mutable std::map<std::pair<SwitchId, SwitchId>, int> next_hop_;

  std::uint64_t last_packet_id_ = 0;
  std::unordered_map<std::uint64_t, PacketFate> fates_;
  NetCounters counters_;
  std::map<std::pair<Address, std::uint16_t>, ConnectionStat> connections_;
  std::vector<HostEvent> host_events_;
  std::vector<std::string> trace_;
  std::vector<ControllerEvent> controller_log_;
  std::uint64_t trace_hash_ = 0;
};

}  // namespace chaos
