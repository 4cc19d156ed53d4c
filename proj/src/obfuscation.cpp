#include "chaos/obfuscation.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "chaos/error.hpp"

namespace chaos {

void ObfuscationConfig::validate() const {
  if (!(fake_rate >= 0.0 && fake_rate <= 1.0))
    throw Error(ErrorCode::ConfigError, "fake_rate must lie in [0,1]", "fake_rate");
  if (ticks_per_epoch == 0)
    throw Error(ErrorCode::ConfigError, "ticks_per_epoch must be positive", "ticks_per_epoch");
  if (buffer_window == 0)
    throw Error(ErrorCode::ConfigError, "buffer_window must be positive", "buffer_window");
}

std::string_view to_string(ObfuscationDecision d) {
  switch (d) {
    case ObfuscationDecision::Forward: return "Forward";
    case ObfuscationDecision::PortObfuscate: return "PortObfuscate";
    case ObfuscationDecision::RedirectToDecoy: return "RedirectToDecoy";
    case ObfuscationDecision::Drop: return "Drop";
  }
  return "?";
}

std::string_view to_string(ReplyVerdict v) {
  switch (v) {
    case ReplyVerdict::FakeOpen: return "FakeOpen";
    case ReplyVerdict::FakeClosed: return "FakeClosed";
    case ReplyVerdict::Real: return "Real";
    case ReplyVerdict::Decoy: return "Decoy";
  }
  return "?";
}

ObfuscationDecision decide(Classification classification, double leapfrog, bool is_request,
                           double draw, const TowerConfig& config) {
  switch (classification) {
    case Classification::NormalExpected:
    case Classification::SpecialExpected:
    case Classification::UnexpectedDown:
      return ObfuscationDecision::Forward;
    case Classification::UnexpectedLevel:
      return config.strict_intra_layer ? ObfuscationDecision::PortObfuscate
                                       : ObfuscationDecision::Forward;
    case Classification::UnexpectedUp:
      break;
  }
  if (leapfrog > config.threshold) return ObfuscationDecision::Drop;
  if (is_request && draw >= config.random_index) return ObfuscationDecision::PortObfuscate;
  return ObfuscationDecision::RedirectToDecoy;
}

// ---------------------------------------------------------------------------
// Mapping tables

std::vector<Address> make_virtual_pool(std::span<const Address> reals, std::size_t factor) {
  const std::set<Address> taken(reals.begin(), reals.end());
  const std::size_t want = std::max<std::size_t>(2, reals.size() * std::max<std::size_t>(factor, 2));
  std::vector<Address> pool;
  std::uint32_t next = Address(198, 18, 0, 1).value;
  while (pool.size() < want) {
    Address a{next++};
    if (!taken.count(a)) pool.push_back(a);
  }
  return pool;
}

MappingTable rotate_mappings(std::span<const Address> real_addresses,
                             std::span<const Address> virtual_pool, std::uint64_t epoch,
                             std::uint64_t seed) {
  std::vector<Address> reals(real_addresses.begin(), real_addresses.end());
  std::sort(reals.begin(), reals.end());
  reals.erase(std::unique(reals.begin(), reals.end()), reals.end());
  std::vector<Address> pool(virtual_pool.begin(), virtual_pool.end());
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

  if (pool.size() < reals.size())
    throw Error(ErrorCode::PoolTooSmall, "virtual pool smaller than real address set");
  for (auto r : reals) {
    if (std::binary_search(pool.begin(), pool.end(), r))
      throw Error(ErrorCode::PoolsOverlap, "virtual pool contains a real address", r.to_string());
  }

  // Partial Fisher-Yates; the shuffle is written out so that it does not
  // depend on the standard library's distribution implementations.
  std::mt19937_64 rng(hash_combine(seed, epoch));
  for (std::size_t i = 0; i < reals.size(); ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
  }

  MappingTable table;
  table.epoch = epoch;
  for (std::size_t i = 0; i < reals.size(); ++i) {
    table.forward.emplace(reals[i], pool[i]);
    table.reverse.emplace(pool[i], reals[i]);
  }
  return table;
}

namespace {
Address translate(const std::map<Address, Address>& m, Address a) {
  auto it = m.find(a);
  if (it == m.end()) throw Error(ErrorCode::UnmappedAddress, "address not in mapping table", a.to_string());
  return it->second;
}
}  // namespace

Packet apply_ingress(Packet packet, const MappingTable& table) {
  packet.src = translate(table.forward, packet.src);
  packet.dst = translate(table.forward, packet.dst);
  return packet;
}

Packet apply_egress(Packet packet, const MappingTable& table) {
  packet.src = translate(table.reverse, packet.src);
  packet.dst = translate(table.reverse, packet.dst);
  return packet;
}

HostMutation::HostMutation(std::vector<Address> reals, std::uint64_t seed, Tick ticks_per_epoch)
    : reals_(std::move(reals)),
      pool_(make_virtual_pool(reals_)),
      seed_(seed),
      ticks_per_epoch_(ticks_per_epoch) {
  if (ticks_per_epoch_ == 0)
    throw Error(ErrorCode::ConfigError, "ticks_per_epoch must be positive", "ticks_per_epoch");
  tables_.emplace(0, rotate_mappings(reals_, pool_, 0, seed_));
}

void HostMutation::on_tick(Tick now) {
  const std::uint64_t e = now / ticks_per_epoch_;
  if (e == epoch_) return;
  epoch_ = e;
  tables_.emplace(e, rotate_mappings(reals_, pool_, e, seed_));
  rotations_ += 1;
  prune(now);
}

HostMutation::ConnKey HostMutation::conn_key(const Packet& p) {
  Endpoint a{p.src, p.src_port};
  Endpoint b{p.dst, p.dst_port};
  return a < b ? ConnKey{a, b} : ConnKey{b, a};
}

std::optional<std::uint64_t> HostMutation::pinned_epoch(const Packet& real_packet) const {
  auto it = pinned_.find(conn_key(real_packet));
  if (it == pinned_.end()) return std::nullopt;
  return it->second.first;
}

void HostMutation::to_virtual(Packet& p, Tick now) {
  const auto key = conn_key(p);
  auto [it, inserted] = pinned_.try_emplace(key, epoch_, now);
  it->second.second = now;
  const auto& table = tables_.at(it->second.first);
  const Address real_dst = p.dst;
  p = apply_ingress(std::move(p), table);
  p.virtualized = true;
  in_transit_[{p.src, p.src_port, p.dst, p.dst_port}] = VirtualFlow{it->second.first, real_dst, now};
}

Address HostMutation::real_destination(const Packet& p) const {
  auto it = in_transit_.find({p.src, p.src_port, p.dst, p.dst_port});
  if (it == in_transit_.end())
    throw Error(ErrorCode::UnmappedAddress, "unknown virtual flow", p.dst.to_string());
  return it->second.real_dst;
}

void HostMutation::to_real(Packet& p) {
  auto it = in_transit_.find({p.src, p.src_port, p.dst, p.dst_port});
  if (it == in_transit_.end())
    throw Error(ErrorCode::UnmappedAddress, "unknown virtual flow", p.dst.to_string());
  p = apply_egress(std::move(p), tables_.at(it->second.epoch));
  p.virtualized = false;
}

void HostMutation::prune(Tick now) {
  // Connections idle for several epochs are released along with the tables
  // nothing refers to any more.
  const Tick idle_limit = 4 * ticks_per_epoch_;
  std::erase_if(pinned_, [&](const auto& kv) { return now - kv.second.second > idle_limit; });
  std::erase_if(in_transit_, [&](const auto& kv) { return now - kv.second.last_used > idle_limit; });
  std::set<std::uint64_t> live{epoch_};
  for (const auto& [_, v] : pinned_) live.insert(v.first);
  for (const auto& [_, v] : in_transit_) live.insert(v.epoch);
  std::erase_if(tables_, [&](const auto& kv) { return !live.count(kv.first); });
}

// ---------------------------------------------------------------------------
// Port obfuscation

ProbeKey probe_key(const Packet& probe) {
  return {probe.src, probe.dst,
          probe.transport == Transport::ICMP ? std::uint16_t{0} : probe.dst_port, probe.transport};
}

std::optional<ReplyVerdict> ReplyBuffer::lookup(const ProbeKey& key, Tick now) const {
  auto it = entries_.find(key);
  if (it == entries_.end() || now >= it->second.stored + window_) return std::nullopt;
  return it->second.verdict;
}

void ReplyBuffer::store(const ProbeKey& key, ReplyVerdict verdict, Tick now) {
  entries_[key] = Entry{verdict, now};
}

namespace {

Packet reply_skeleton(const Packet& probe, int ttl) {
  Packet r;
  r.src = probe.dst;
  r.dst = probe.src;
  r.src_port = probe.dst_port;
  r.dst_port = probe.src_port;
  r.transport = probe.transport;
  r.ttl = ttl;
  return r;
}

}  // namespace

SynthesizedReply synthesize_scan_reply(const Packet& probe, const HostProfile& host_truth,
                                       ReplyBuffer& buffer, double draw,
                                       const ObfuscationConfig& config, Tick now) {
  const bool tcp_syn = probe.transport == Transport::TCP && probe.has(Flag::Syn) && !probe.has(Flag::Ack);
  const bool udp_probe = probe.transport == Transport::UDP && probe.is_request();
  const bool echo = probe.transport == Transport::ICMP && probe.has(Flag::Echo);
  if (!tcp_syn && !udp_probe && !echo)
    throw Error(ErrorCode::UnsupportedProbeType, "not a SYN, UDP probe or ICMP echo", probe.describe());

  const auto key = probe_key(probe);
  SynthesizedReply out;
  if (auto stored = buffer.lookup(key, now); stored && *stored != ReplyVerdict::Decoy) {
    out.verdict = *stored;
    out.replayed = true;
  } else {
    const bool truly_open = echo || host_truth.find_service(probe.transport, probe.dst_port) != nullptr;
    if (draw < config.fake_rate) {
      out.verdict = truly_open ? ReplyVerdict::FakeClosed : ReplyVerdict::FakeOpen;
    } else {
      out.verdict = ReplyVerdict::Real;
    }
    buffer.store(key, out.verdict, now);
  }

  if (out.verdict == ReplyVerdict::Real) return out;

  if (echo) {
    // Live host made to look dead.
    return out;
  }

  Packet r = reply_skeleton(probe, config.synthetic_ttl);
  if (out.verdict == ReplyVerdict::FakeOpen) {
    if (tcp_syn && probe.payload_tag.empty()) {
      r.flags = Flag::Syn | Flag::Ack;
    } else {
      r.flags = static_cast<std::uint8_t>(Flag::Ack);
      // No service behind a fake-open port.
      if (probe.payload_tag == "banner-request") r.payload_tag = "banner:";
    }
  } else if (tcp_syn) {
    r.flags = Flag::Rst | Flag::Ack;
  } else {
    r.transport = Transport::ICMP;
    r.flags = static_cast<std::uint8_t>(Flag::Unreachable);
  }
  out.reply = std::move(r);
  return out;
}

// ---------------------------------------------------------------------------
// Decoys

Address choose_decoy(const Packet& packet, std::span<const Address> decoy_pool, std::uint64_t seed) {
  if (decoy_pool.empty()) throw Error(ErrorCode::NoDecoysConfigured, "decoy pool is empty");
  std::uint64_t h = hash_combine(seed, packet.src.value);
  h = hash_combine(h, packet.dst.value);
  h = hash_combine(h, static_cast<std::uint64_t>(packet.transport));
  h = hash_combine(h, packet.dst_port);
  return decoy_pool[h % decoy_pool.size()];
}

Packet redirect_to_decoy(Packet packet, std::span<const Address> decoy_pool, std::uint64_t seed) {
  packet.dst = choose_decoy(packet, decoy_pool, seed);
  return packet;
}

}  // namespace chaos
