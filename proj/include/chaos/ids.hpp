#pragma once

#include <deque>
#include <map>
#include <span>

#include "chaos/netsim.hpp"
#include "chaos/tower.hpp"

namespace chaos {

struct IdsThresholds {
  int port_scan_k = 15;  // distinct ports on one target
  int sweep_k = 10;      // distinct targets
  Tick window = 100;

  friend bool operator==(const IdsThresholds&, const IdsThresholds&) = default;
};

struct FlowObservation {
  Tick tick = 0;
  Address src;
  Address dst;
  Transport transport = Transport::TCP;
  std::uint16_t dst_port = 0;
};

/// Rate-based scan heuristic over one source's recent requests. Observations
/// older than `thresholds.window` ticks before `now` are ignored.
IdsVerdict ids_inspect(std::span<const FlowObservation> history, Tick now,
                       const IdsThresholds& thresholds);

/// Passive monitor fed from the fabric tap; keeps a sliding window per source.
class Ids {
 public:
  explicit Ids(IdsThresholds thresholds = {}) : thresholds_(thresholds) {}

  void observe(const Packet& p, Tick now);
  IdsVerdict verdict(Address src, Tick now);
  const IdsThresholds& thresholds() const { return thresholds_; }

 private:
  struct PortKey {
    Transport transport;
    std::uint16_t port;
    friend auto operator<=>(const PortKey&, const PortKey&) = default;
  };
  struct SourceState {
    std::deque<FlowObservation> recent;
    std::map<Address, std::map<PortKey, int>> ports_by_target;
  };

  void prune(SourceState& s, Tick now);

  IdsThresholds thresholds_;
  std::map<Address, SourceState> sources_;
};

}  // namespace chaos
