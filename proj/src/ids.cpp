#include "chaos/ids.hpp"

#include <set>

namespace chaos {

namespace {
bool in_window(Tick obs, Tick now, Tick window) { return obs + window > now; }
}  // namespace

IdsVerdict ids_inspect(std::span<const FlowObservation> history, Tick now,
                       const IdsThresholds& thresholds) {
  std::map<Address, std::map<Address, std::set<std::pair<Transport, std::uint16_t>>>> seen;
  for (const auto& o : history) {
    if (!in_window(o.tick, now, thresholds.window) || o.tick > now) continue;
    seen[o.src][o.dst].insert({o.transport, o.dst_port});
  }
  for (const auto& [src, targets] : seen) {
    if (static_cast<int>(targets.size()) >= thresholds.sweep_k) return IdsVerdict::Suspicious;
    for (const auto& [dst, ports] : targets) {
      if (static_cast<int>(ports.size()) >= thresholds.port_scan_k) return IdsVerdict::Suspicious;
    }
  }
  return IdsVerdict::Normal;
}

void Ids::observe(const Packet& p, Tick now) {
  if (!p.is_request()) return;
  auto& s = sources_[p.src];
  s.recent.push_back({now, p.src, p.dst, p.transport, p.dst_port});
  s.ports_by_target[p.dst][{p.transport, p.dst_port}] += 1;
}

void Ids::prune(SourceState& s, Tick now) {
  while (!s.recent.empty() && !in_window(s.recent.front().tick, now, thresholds_.window)) {
    const auto& o = s.recent.front();
    auto target = s.ports_by_target.find(o.dst);
    auto port = target->second.find({o.transport, o.dst_port});
    if (--port->second == 0) target->second.erase(port);
    if (target->second.empty()) s.ports_by_target.erase(target);
    s.recent.pop_front();
  }
}

IdsVerdict Ids::verdict(Address src, Tick now) {
  auto it = sources_.find(src);
  if (it == sources_.end()) return IdsVerdict::Normal;
  prune(it->second, now);
  const auto& targets = it->second.ports_by_target;
  if (static_cast<int>(targets.size()) >= thresholds_.sweep_k) return IdsVerdict::Suspicious;
  for (const auto& [dst, ports] : targets) {
    if (static_cast<int>(ports.size()) >= thresholds_.port_scan_k) return IdsVerdict::Suspicious;
  }
  return IdsVerdict::Normal;
}

}  // namespace chaos
