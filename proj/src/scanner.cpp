#include "chaos/scanner.hpp"

#include <algorithm>
#include <charconv>

#include <fmt/format.h>

#include "chaos/error.hpp"

namespace chaos {

std::string_view to_string(PortState s) {
  switch (s) {
    case PortState::Open: return "open";
    case PortState::Closed: return "closed";
    case PortState::Filtered: return "filtered";
  }
  return "?";
}

std::string_view to_string(ExploitOutcome o) {
  switch (o) {
    case ExploitOutcome::Success: return "Success";
    case ExploitOutcome::FailedDecoy: return "FailedDecoy";
    case ExploitOutcome::FailedDropped: return "FailedDropped";
    case ExploitOutcome::FailedNotVulnerable: return "FailedNotVulnerable";
  }
  return "?";
}

GroundTruth GroundTruth::from_profiles(std::span<const HostProfile> hosts) {
  GroundTruth t;
  for (const auto& h : hosts) {
    if (h.is_decoy) continue;
    t.live_hosts.insert(h.host_id);
    for (const auto& s : h.services) {
      t.open_ports.insert({h.host_id, s.transport, s.port});
      if (s.transport == Transport::TCP && !s.banner.empty()) t.banners[{h.host_id, s.port}] = s.banner;
    }
  }
  return t;
}

void ScanReport::merge(const ScanReport& later) {
  observed_live.insert(later.observed_live.begin(), later.observed_live.end());
  for (const auto& [k, v] : later.observed_ports) observed_ports[k] = v;
  for (const auto& [k, v] : later.observed_banners) observed_banners[k] = v;
  elapsed_ticks += later.elapsed_ticks;
}

std::string ScanReport::serialize() const {
  std::string out;
  for (const auto& h : observed_live) out += fmt::format("live {}\n", h);
  for (const auto& [f, s] : observed_ports)
    out += fmt::format("port {} {} {} {}\n", f.host, to_string(f.transport), f.port, to_string(s));
  for (const auto& [k, b] : observed_banners) out += fmt::format("banner {} {} {}\n", k.first, k.second, b);
  out += fmt::format("true_facts {}\nelapsed_ticks {}\n", true_fact_count, elapsed_ticks);
  return out;
}

std::size_t count_true_facts(const ScanReport& report, const GroundTruth& truth) {
  std::size_t n = 0;
  for (const auto& h : report.observed_live) n += truth.live_hosts.count(h);
  for (const auto& [f, s] : report.observed_ports)
    if (s == PortState::Open) n += truth.open_ports.count(f);
  for (const auto& [k, b] : report.observed_banners) {
    auto it = truth.banners.find(k);
    if (it != truth.banners.end() && it->second == b) ++n;
  }
  return n;
}

double information_disclosure(const ScanReport& report, const GroundTruth& truth,
                              const ScanReport& baseline) {
  const auto base = count_true_facts(baseline, truth);
  if (base == 0) throw Error(ErrorCode::ZeroBaseline, "baseline scan learned no true facts");
  return static_cast<double>(count_true_facts(report, truth)) / static_cast<double>(base);
}

OverheadMetrics overhead_metrics(const Network& net, std::uint64_t obfuscated_connections,
                                 double controller_cost) {
  OverheadMetrics m;
  m.controller_ops = net.counters().controller_ops();
  m.obfuscated_connections = obfuscated_connections;
  double total = 0.0;
  std::size_t answered = 0;
  for (const auto& [_, c] : net.connections()) {
    if (!c.answered) continue;
    total += static_cast<double>(*c.answered - c.opened) + controller_cost * c.packet_ins;
    ++answered;
  }
  if (answered) m.mean_delay_ticks = total / static_cast<double>(answered);
  return m;
}

// ---------------------------------------------------------------------------

Scanner::Scanner(Network& net, HostId attacker, GroundTruth truth, Tick response_timeout)
    : net_(net), attacker_(std::move(attacker)), truth_(std::move(truth)), timeout_(response_timeout) {
  net_.host(attacker_);  // throws UnknownHost
}

std::uint16_t Scanner::next_port() {
  ephemeral_ = ephemeral_ >= 65535 ? 1025 : static_cast<std::uint16_t>(ephemeral_ + 1);
  return ephemeral_;
}

Packet Scanner::make_probe(const HostId& target, std::uint16_t port, Transport transport,
                           std::string payload) {
  Packet p;
  p.src = net_.host(attacker_).real_address;
  p.dst = net_.host(target).real_address;
  p.transport = transport;
  p.src_port = next_port();
  p.payload_tag = std::move(payload);
  switch (transport) {
    case Transport::TCP:
      p.dst_port = port;
      p.flags = static_cast<std::uint8_t>(Flag::Syn);
      break;
    case Transport::UDP:
      p.dst_port = port;
      break;
    case Transport::ICMP:
      p.dst_port = p.src_port;
      p.flags = static_cast<std::uint8_t>(Flag::Echo);
      break;
  }
  return p;
}

std::map<std::uint16_t, std::vector<Packet>> Scanner::collect() {
  net_.run(timeout_);
  std::map<std::uint16_t, std::vector<Packet>> by_port;
  for (auto& p : net_.take_inbox(attacker_)) by_port[p.dst_port].push_back(std::move(p));
  return by_port;
}

ScanReport Scanner::finish(ScanReport report, Tick started) {
  report.elapsed_ticks = net_.now() - started;
  report.true_fact_count = count_true_facts(report, truth_);
  return report;
}

ScanReport Scanner::ping_sweep(std::span<const HostId> targets) {
  const Tick started = net_.now();
  ScanReport report;
  if (targets.empty()) return report;
  std::map<std::uint16_t, HostId> sent;
  for (const auto& t : targets) {
    auto p = make_probe(t, 0, Transport::ICMP);
    sent[p.src_port] = t;
    net_.send(attacker_, std::move(p));
  }
  auto replies = collect();
  for (const auto& [port, target] : sent) {
    auto it = replies.find(port);
    if (it == replies.end()) continue;
    for (const auto& r : it->second)
      if (r.transport == Transport::ICMP && r.has(Flag::EchoReply)) report.observed_live.insert(target);
  }
  return finish(std::move(report), started);
}

ScanReport Scanner::port_scan(const HostId& target, std::span<const std::uint16_t> ports,
                              Transport transport) {
  return port_scan(std::span<const HostId>(&target, 1), ports, transport);
}

ScanReport Scanner::port_scan(std::span<const HostId> targets, std::span<const std::uint16_t> ports,
                              Transport transport) {
  if (transport == Transport::ICMP)
    throw Error(ErrorCode::UnsupportedProbeType, "port scans use TCP or UDP", "transport");
  const Tick started = net_.now();
  ScanReport report;
  if (targets.empty() || ports.empty()) return report;
  std::map<std::uint16_t, Probe> sent;
  for (const auto& t : targets) {
    for (auto port : ports) {
      auto p = make_probe(t, port, transport);
      sent[p.src_port] = Probe{t, port, transport};
      net_.send(attacker_, std::move(p));
    }
  }
  auto replies = collect();
  for (const auto& [local, probe] : sent) {
    PortState state = PortState::Filtered;
    if (auto it = replies.find(local); it != replies.end()) {
      const Packet& r = it->second.front();
      if (r.transport == Transport::ICMP && r.has(Flag::Unreachable)) {
        state = PortState::Closed;
      } else if (r.has(Flag::Rst)) {
        state = PortState::Closed;
      } else if (transport == Transport::TCP ? (r.has(Flag::Syn) && r.has(Flag::Ack)) : r.has(Flag::Ack)) {
        state = PortState::Open;
      }
    }
    report.observed_ports[{probe.target, transport, probe.port}] = state;
  }
  return finish(std::move(report), started);
}

ScanReport Scanner::fingerprint(const HostId& target, std::uint16_t port) {
  ScanReport seen;
  seen.observed_ports[{target, Transport::TCP, port}] = PortState::Open;
  return fingerprint_open(seen);
}

ScanReport Scanner::fingerprint_open(const ScanReport& seen) {
  const Tick started = net_.now();
  ScanReport report;
  std::map<std::uint16_t, BannerKey> sent;
  for (const auto& [f, state] : seen.observed_ports) {
    if (state != PortState::Open || f.transport != Transport::TCP) continue;
    auto p = make_probe(f.host, f.port, Transport::TCP, "banner-request");
    sent[p.src_port] = {f.host, f.port};
    net_.send(attacker_, std::move(p));
  }
  if (sent.empty()) return report;
  auto replies = collect();
  constexpr std::string_view kBanner = "banner:";
  for (const auto& [local, key] : sent) {
    auto it = replies.find(local);
    if (it == replies.end()) continue;
    for (const auto& r : it->second) {
      if (!r.payload_tag.starts_with(kBanner)) continue;
      auto banner = r.payload_tag.substr(kBanner.size());
      if (!banner.empty()) report.observed_banners[key] = banner;
    }
  }
  return finish(std::move(report), started);
}

ScanReport Scanner::full_scan(std::span<const HostId> targets, std::span<const std::uint16_t> ports) {
  ScanReport report = ping_sweep(targets);
  report.merge(port_scan(targets, ports, Transport::TCP));
  report.merge(fingerprint_open(report));
  report.true_fact_count = count_true_facts(report, truth_);
  return report;
}

ExploitOutcome Scanner::exploit_attempt(const HostId& target, std::uint16_t port,
                                        const std::string& vuln_id) {
  bool known = false;
  for (const auto& id : net_.host_ids()) known = known || net_.host(id).has_vulnerability(vuln_id);
  if (!known) throw Error(ErrorCode::UnknownVulnId, "no host lists this vulnerability", vuln_id);

  auto p = make_probe(target, port, Transport::TCP, "exploit:" + vuln_id);
  const auto id = net_.send(attacker_, std::move(p));
  net_.run(timeout_);
  net_.take_inbox(attacker_);

  const auto fate = net_.fate(id);
  if (!fate) return ExploitOutcome::FailedDropped;
  switch (fate->kind) {
    case FateKind::AbsorbedByDecoy:
      return ExploitOutcome::FailedDecoy;
    case FateKind::Delivered:
      return fate->host == target && net_.host(target).has_vulnerability(vuln_id)
                 ? ExploitOutcome::Success
                 : ExploitOutcome::FailedNotVulnerable;
    default:
      return ExploitOutcome::FailedDropped;
  }
}

std::vector<std::uint16_t> parse_port_list(std::string_view text) {
  std::vector<std::uint16_t> out;
  auto parse_one = [&](std::string_view s) {
    unsigned v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v < 1 || v > 65535)
      throw Error(ErrorCode::ParseError, fmt::format("bad port '{}'", s), "ports");
    return static_cast<std::uint16_t>(v);
  };
  while (!text.empty()) {
    const auto comma = text.find(',');
    auto item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (item.empty()) continue;
    if (auto dash = item.find('-'); dash != std::string_view::npos) {
      const auto lo = parse_one(item.substr(0, dash));
      const auto hi = parse_one(item.substr(dash + 1));
      if (lo > hi) throw Error(ErrorCode::ParseError, fmt::format("empty range '{}'", item), "ports");
      for (unsigned v = lo; v <= hi; ++v) out.push_back(static_cast<std::uint16_t>(v));
    } else {
      out.push_back(parse_one(item));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace chaos
