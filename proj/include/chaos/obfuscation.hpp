#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "chaos/netsim.hpp"
#include "chaos/tower.hpp"

namespace chaos {

struct ObfuscationConfig {
  double fake_rate = 0.5;       // probability a probe reply is flipped
  Tick ticks_per_epoch = 50;    // host-mutation rotation period
  Tick buffer_window = 1000;    // lifetime of a buffered reply action
  int synthetic_ttl = kDefaultTtl;
  Tick redirect_idle_timeout = 64;

  void validate() const;
  friend bool operator==(const ObfuscationConfig&, const ObfuscationConfig&) = default;
};

enum class ObfuscationDecision { Forward, PortObfuscate, RedirectToDecoy, Drop };

std::string_view to_string(ObfuscationDecision d);

/// Obfuscation choice for one connection. Host mutation applies to every
/// connection separately and is not part of this table.
ObfuscationDecision decide(Classification classification, double leapfrog, bool is_request,
                           double draw, const TowerConfig& config);

// ---------------------------------------------------------------------------
// Host mutation

struct MappingTable {
  std::uint64_t epoch = 0;
  std::map<Address, Address> forward;  // real -> virtual
  std::map<Address, Address> reverse;  // virtual -> real

  friend bool operator==(const MappingTable&, const MappingTable&) = default;
};

/// Reserved block (198.18.0.0/15) sized `factor` x the real address count,
/// skipping anything that collides with a real address.
std::vector<Address> make_virtual_pool(std::span<const Address> reals, std::size_t factor = 4);

MappingTable rotate_mappings(std::span<const Address> real_addresses,
                             std::span<const Address> virtual_pool, std::uint64_t epoch,
                             std::uint64_t seed);

Packet apply_ingress(Packet packet, const MappingTable& table);
Packet apply_egress(Packet packet, const MappingTable& table);

/// Per-connection pinned rIP<->vIP translation performed at the edge switches.
/// A connection keeps the table of the epoch in which its first packet was
/// translated, regardless of later rotations.
class HostMutation : public AddressTranslator {
 public:
  HostMutation(std::vector<Address> reals, std::uint64_t seed, Tick ticks_per_epoch);

  /// Rotates when the epoch boundary is crossed.
  void on_tick(Tick now);
  std::uint64_t epoch() const { return epoch_; }
  const MappingTable& current() const { return tables_.at(epoch_); }
  const MappingTable& table(std::uint64_t epoch) const { return tables_.at(epoch); }
  std::size_t rotations() const { return rotations_; }
  std::optional<std::uint64_t> pinned_epoch(const Packet& real_packet) const;

  void to_virtual(Packet& p, Tick now) override;
  Address real_destination(const Packet& p) const override;
  void to_real(Packet& p) override;

 private:
  using Endpoint = std::pair<Address, std::uint16_t>;
  using ConnKey = std::pair<Endpoint, Endpoint>;  // sorted endpoints
  struct VirtualFlow {
    std::uint64_t epoch;
    Address real_dst;
    Tick last_used;
  };
  using VirtualKey = std::tuple<Address, std::uint16_t, Address, std::uint16_t>;

  static ConnKey conn_key(const Packet& p);
  void prune(Tick now);

  std::vector<Address> reals_;
  std::vector<Address> pool_;
  std::uint64_t seed_;
  Tick ticks_per_epoch_;
  std::uint64_t epoch_ = 0;
  std::size_t rotations_ = 0;
  std::map<std::uint64_t, MappingTable> tables_;
  std::map<ConnKey, std::pair<std::uint64_t, Tick>> pinned_;
  std::map<VirtualKey, VirtualFlow> in_transit_;
};

// ---------------------------------------------------------------------------
// Port obfuscation

enum class ReplyVerdict { FakeOpen, FakeClosed, Real, Decoy };

std::string_view to_string(ReplyVerdict v);

struct ProbeKey {
  Address prober;
  Address target;
  std::uint16_t port = 0;
  Transport transport = Transport::TCP;

  friend auto operator<=>(const ProbeKey&, const ProbeKey&) = default;
};

ProbeKey probe_key(const Packet& probe);

/// Remembers the action taken for each (prober, target, port, transport) so
/// that repeated probes inside the window see the same behaviour.
class ReplyBuffer {
 public:
  explicit ReplyBuffer(Tick window = 1000) : window_(window) {}

  std::optional<ReplyVerdict> lookup(const ProbeKey& key, Tick now) const;
  void store(const ProbeKey& key, ReplyVerdict verdict, Tick now);
  std::size_t size() const { return entries_.size(); }
  Tick window() const { return window_; }

 private:
  struct Entry {
    ReplyVerdict verdict;
    Tick stored;
  };
  Tick window_;
  std::map<ProbeKey, Entry> entries_;
};

struct SynthesizedReply {
  ReplyVerdict verdict = ReplyVerdict::Real;
  // Empty with verdict Real: forward to the real host.
  // Empty with a fake verdict: drop silently.
  std::optional<Packet> reply;
  bool replayed = false;
};

SynthesizedReply synthesize_scan_reply(const Packet& probe, const HostProfile& host_truth,
                                       ReplyBuffer& buffer, double draw,
                                       const ObfuscationConfig& config, Tick now = 0);

// ---------------------------------------------------------------------------
// Decoy redirection

Address choose_decoy(const Packet& packet, std::span<const Address> decoy_pool, std::uint64_t seed);

Packet redirect_to_decoy(Packet packet, std::span<const Address> decoy_pool, std::uint64_t seed);

}  // namespace chaos
