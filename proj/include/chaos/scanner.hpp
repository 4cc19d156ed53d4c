#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "chaos/netsim.hpp"

namespace chaos {

enum class PortState { Open, Closed, Filtered };

std::string_view to_string(PortState s);

struct PortFact {
  HostId host;
  Transport transport = Transport::TCP;
  std::uint16_t port = 0;

  friend auto operator<=>(const PortFact&, const PortFact&) = default;
};

using BannerKey = std::pair<HostId, std::uint16_t>;

/// What is really there, taken from the host profiles alone.
struct GroundTruth {
  std::set<HostId> live_hosts;
  std::set<PortFact> open_ports;
  std::map<BannerKey, std::string> banners;

  static GroundTruth from_profiles(std::span<const HostProfile> hosts);
  std::size_t fact_count() const { return live_hosts.size() + open_ports.size() + banners.size(); }
};

struct ScanReport {
  std::set<HostId> observed_live;
  std::map<PortFact, PortState> observed_ports;
  std::map<BannerKey, std::string> observed_banners;
  std::size_t true_fact_count = 0;
  Tick elapsed_ticks = 0;

  /// Folds a later fragment in. Port and banner observations are replaced by
  /// the newer one; liveness accumulates.
  void merge(const ScanReport& later);
  /// Canonical text form, stable across runs.
  std::string serialize() const;

  friend bool operator==(const ScanReport&, const ScanReport&) = default;
};

/// Live hosts, open ports and banners in `report` that agree with `truth`.
std::size_t count_true_facts(const ScanReport& report, const GroundTruth& truth);

/// ID(report) / ID(baseline). Throws ZeroBaseline when the baseline learned nothing.
double information_disclosure(const ScanReport& report, const GroundTruth& truth,
                              const ScanReport& baseline);

enum class ExploitOutcome { Success, FailedDecoy, FailedDropped, FailedNotVulnerable };

std::string_view to_string(ExploitOutcome o);

struct OverheadMetrics {
  std::uint64_t controller_ops = 0;
  std::uint64_t obfuscated_connections = 0;
  double mean_delay_ticks = 0.0;
};

/// Delay of an answered connection is its round trip plus `controller_cost`
/// ticks for every packet-in it caused.
OverheadMetrics overhead_metrics(const Network& net, std::uint64_t obfuscated_connections,
                                 double controller_cost = 1.0);

/// Attacker harness. Probes are sent in one batch, the network is stepped for
/// `response_timeout` ticks and whatever came back is read from the inbox.
class Scanner {
 public:
  Scanner(Network& net, HostId attacker, GroundTruth truth, Tick response_timeout = 16);

  ScanReport ping_sweep(std::span<const HostId> targets);
  ScanReport port_scan(const HostId& target, std::span<const std::uint16_t> ports,
                       Transport transport = Transport::TCP);
  ScanReport port_scan(std::span<const HostId> targets, std::span<const std::uint16_t> ports,
                       Transport transport = Transport::TCP);
  ScanReport fingerprint(const HostId& target, std::uint16_t port);
  /// Banner grab on every TCP port `seen` reports open.
  ScanReport fingerprint_open(const ScanReport& seen);
  /// Ping sweep, TCP port scan of every target, then banner grabs.
  ScanReport full_scan(std::span<const HostId> targets, std::span<const std::uint16_t> ports);

  ExploitOutcome exploit_attempt(const HostId& target, std::uint16_t port, const std::string& vuln_id);

  const HostId& attacker() const { return attacker_; }
  const GroundTruth& truth() const { return truth_; }
  Tick response_timeout() const { return timeout_; }

 private:
  struct Probe {
    HostId target;
    std::uint16_t port = 0;
    Transport transport = Transport::TCP;
  };

  std::uint16_t next_port();
  Packet make_probe(const HostId& target, std::uint16_t port, Transport transport, std::string payload = {});
  /// Steps the network and returns replies keyed by the local port they answer.
  std::map<std::uint16_t, std::vector<Packet>> collect();
  ScanReport finish(ScanReport report, Tick started);

  Network& net_;
  HostId attacker_;
  GroundTruth truth_;
  Tick timeout_;
  std::uint16_t ephemeral_ = 1024;
};

/// Parses "1-1024,3306,8080" style port lists. Result is sorted and unique.
std::vector<std::uint16_t> parse_port_list(std::string_view text);

}  // namespace chaos
