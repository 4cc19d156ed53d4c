#include "chaos/tower.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "chaos/error.hpp"

namespace chaos {

const ServiceRecord* HostProfile::find_service(Transport transport, std::uint16_t port) const {
  for (const auto& s : services) {
    if (s.transport == transport && s.port == port) return &s;
  }
  return nullptr;
}

bool HostProfile::has_vulnerability(std::string_view vuln_id) const {
  return std::any_of(vulnerabilities.begin(), vulnerabilities.end(),
                     [&](const VulnerabilityRecord& v) { return v.vuln_id == vuln_id; });
}

std::string_view to_string(Binning b) {
  return b == Binning::EqualWidth ? "equal_width" : "quantile";
}

std::string_view to_string(IdsVerdict v) {
  return v == IdsVerdict::Normal ? "Normal" : "Suspicious";
}

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::NormalExpected: return "NormalExpected";
    case Classification::SpecialExpected: return "SpecialExpected";
    case Classification::UnexpectedDown: return "UnexpectedDown";
    case Classification::UnexpectedLevel: return "UnexpectedLevel";
    case Classification::UnexpectedUp: return "UnexpectedUp";
  }
  return "?";
}

void TowerConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::ConfigError, "alpha must lie in [0,1]", "alpha");
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw Error(ErrorCode::ConfigError, "threshold must lie in [0,1]", "threshold");
  if (!(random_index > 0.0 && random_index < 1.0))
    throw Error(ErrorCode::ConfigError, "random_index must lie in (0,1)", "random_index");
  if (layer_count < 1) throw Error(ErrorCode::ConfigError, "layer_count must be >= 1", "layer_count");
  for (const auto& [name, siv] : siv_table) {
    if (!(siv >= 0.0 && siv <= 10.0))
      throw Error(ErrorCode::ConfigError, "SIV for '" + name + "' outside [0,10]", "siv_table");
  }
}

double compute_risk_level(const HostProfile& host, const TowerConfig& config) {
  if (host.is_decoy) throw Error(ErrorCode::ConfigError, "decoy hosts are not scored", host.host_id);
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0))
    throw Error(ErrorCode::ConfigError, "alpha must lie in [0,1]", "alpha");

  // Every vulnerability is charged against the host's most important service.
  double top_siv = 0.0;
  for (const auto& s : host.services) {
    auto it = config.siv_table.find(s.service_name);
    if (it == config.siv_table.end())
      throw Error(ErrorCode::UnknownService, "no SIV for service '" + s.service_name + "'",
                  s.service_name);
    if (!(it->second >= 0.0 && it->second <= 10.0))
      throw Error(ErrorCode::InvalidScore, "SIV outside [0,10]", s.service_name);
    top_siv = std::max(top_siv, it->second);
  }

  double rl = 0.0;
  for (const auto& v : host.vulnerabilities) {
    if (!(v.cvss_base >= 0.0 && v.cvss_base <= 10.0))
      throw Error(ErrorCode::InvalidScore, "CVSS outside [0,10]", v.vuln_id);
    rl += config.alpha * top_siv + (1.0 - config.alpha) * v.cvss_base;
  }
  return rl;
}

// ---------------------------------------------------------------------------
// ChaosTower queries

const HostProfile& ChaosTower::host(const HostId& id) const {
  auto it = hosts_.find(id);
  if (it == hosts_.end()) throw Error(ErrorCode::UnknownHost, "host not in tower", id);
  return it->second;
}

const Group& ChaosTower::group_of(const HostId& id) const {
  auto it = host_group_.find(id);
  if (it == host_group_.end()) throw Error(ErrorCode::UnknownHost, "host not in tower", id);
  return groups_.at(it->second);
}

double ChaosTower::risk_of(const HostId& id) const {
  auto it = risk_.find(id);
  if (it == risk_.end()) throw Error(ErrorCode::UnknownHost, "host not in tower", id);
  return it->second;
}

std::optional<HostId> ChaosTower::host_at(Address address) const {
  auto it = by_address_.find(address);
  if (it == by_address_.end()) return std::nullopt;
  return it->second;
}

std::vector<HostId> ChaosTower::host_ids() const {
  std::vector<HostId> out;
  out.reserve(hosts_.size());
  for (const auto& [id, _] : hosts_) out.push_back(id);
  return out;
}

bool ChaosTower::whitelisted(const HostId& src, const HostId& dst, std::uint16_t port,
                             Tick now) const {
  const auto& sg = group_of(src).group_id;
  const auto& dg = group_of(dst).group_id;
  return std::any_of(whitelist_.begin(), whitelist_.end(), [&](const WhitelistEntry& e) {
    return e.src_group == sg && e.dst_group == dg && e.dst_port == port &&
           (!e.active || e.active->contains(now));
  });
}

void ChaosTower::reindex_layers() {
  std::sort(layers_.begin(), layers_.end(),
            [](const Layer& a, const Layer& b) { return a.bin < b.bin; });
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (const auto& g : layers_[i].groups) groups_.at(g).layer_index = static_cast<int>(i);
  }
}

std::string ChaosTower::dump() const {
  using nlohmann::json;
  json j;
  j["height"] = height();
  j["alpha"] = config_.alpha;
  j["threshold"] = config_.threshold;
  j["random_index"] = config_.random_index;
  j["binning"] = to_string(config_.binning);
  j["bin_cuts"] = cuts_;
  json layers = json::array();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    json groups = json::array();
    for (const auto& gid : layers_[i].groups) {
      const auto& g = groups_.at(gid);
      json hosts = json::array();
      for (const auto& h : g.host_ids) hosts.push_back({{"host", h}, {"risk_level", risk_.at(h)}});
      groups.push_back({{"group", g.group_id},
                        {"attachment", g.attachment},
                        {"risk_level", g.risk_level},
                        {"hosts", hosts}});
    }
    layers.push_back({{"index", i}, {"bin", layers_[i].bin}, {"groups", groups}});
  }
  j["layers"] = layers;
  json wl = json::array();
  for (const auto& e : whitelist_) {
    json entry = {{"src_group", e.src_group}, {"dst_group", e.dst_group}, {"port", e.dst_port}};
    if (e.active) entry["active"] = {e.active->begin, e.active->end};
    wl.push_back(entry);
  }
  j["whitelist"] = wl;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Construction

namespace {

struct Scored {
  const HostProfile* host;
  double rl;
};

int bin_for(const std::vector<double>& cuts, double rl) {
  return static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), rl) - cuts.begin());
}

}  // namespace

ChaosTower build_tower(std::span<const HostProfile> hosts, const TowerConfig& config,
                       std::span<const WhitelistRule> whitelist) {
  config.validate();

  std::vector<Scored> scored;
  std::set<Address> seen_addresses;
  std::set<HostId> seen_ids;
  for (const auto& h : hosts) {
    if (!seen_ids.insert(h.host_id).second)
      throw Error(ErrorCode::DuplicateHost, "duplicate host id", h.host_id);
    if (!seen_addresses.insert(h.real_address).second)
      throw Error(ErrorCode::ConfigError, "duplicate real address", h.host_id);
    if (h.is_decoy) continue;
    scored.push_back({&h, compute_risk_level(h, config)});
  }
  if (scored.empty()) throw Error(ErrorCode::EmptyNetwork, "no non-decoy hosts");

  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.rl != b.rl) return a.rl < b.rl;
    return a.host->host_id < b.host->host_id;
  });

  const int bins = config.layer_count;
  const std::size_t n = scored.size();
  std::vector<double> cuts;
  std::vector<int> bin_of(n);

  if (config.binning == Binning::EqualWidth) {
    const double lo = scored.front().rl;
    const double hi = scored.back().rl;
    const double width = (hi - lo) / bins;
    for (int j = 1; j < bins; ++j) cuts.push_back(lo + width * j);
    for (std::size_t i = 0; i < n; ++i) bin_of[i] = bin_for(cuts, scored[i].rl);
  } else {
    // Equal-population bins over the (rl, host_id) order.
    for (std::size_t i = 0; i < n; ++i)
      bin_of[i] = static_cast<int>((i * static_cast<std::size_t>(bins)) / n);
    for (int j = 1; j < bins; ++j) {
      auto first = std::find(bin_of.begin(), bin_of.end(), j);
      cuts.push_back(first == bin_of.end() ? std::numeric_limits<double>::infinity()
                                           : scored[first - bin_of.begin()].rl);
    }
    // Keep cuts non-decreasing when trailing bins are empty.
    for (std::size_t j = cuts.size(); j-- > 1;) cuts[j - 1] = std::min(cuts[j - 1], cuts[j]);
  }

  ChaosTower tower;
  tower.config_ = config;
  tower.cuts_ = std::move(cuts);

  // bin -> switch -> hosts
  std::map<int, std::map<SwitchId, std::vector<const Scored*>>> layout;
  for (std::size_t i = 0; i < n; ++i)
    layout[bin_of[i]][scored[i].host->attachment].push_back(&scored[i]);

  // Group numbering runs from the top layer down so "G1" is the top group.
  for (auto bin_it = layout.rbegin(); bin_it != layout.rend(); ++bin_it) {
    Layer layer;
    layer.bin = bin_it->first;
    for (const auto& [sw, members] : bin_it->second) {
      Group g;
      g.group_id = "G" + std::to_string(tower.next_group_number_++);
      g.attachment = sw;
      for (const auto* m : members) {
        g.host_ids.insert(m->host->host_id);
        g.risk_level = std::max(g.risk_level, m->rl);
        tower.hosts_.emplace(m->host->host_id, *m->host);
        tower.risk_.emplace(m->host->host_id, m->rl);
        tower.host_group_.emplace(m->host->host_id, g.group_id);
        tower.by_address_.emplace(m->host->real_address, m->host->host_id);
      }
      layer.groups.push_back(g.group_id);
      tower.groups_.emplace(g.group_id, std::move(g));
    }
    tower.layers_.push_back(std::move(layer));
  }
  tower.reindex_layers();

  for (const auto& rule : whitelist) {
    if (!tower.contains(rule.src_host))
      throw Error(ErrorCode::UnknownHost, "whitelist source not in tower", rule.src_host);
    if (!tower.contains(rule.dst_host))
      throw Error(ErrorCode::UnknownHost, "whitelist destination not in tower", rule.dst_host);
    tower.whitelist_.push_back({tower.group_of(rule.src_host).group_id,
                                tower.group_of(rule.dst_host).group_id, rule.port, rule.active});
  }
  return tower;
}

ChaosTower insert_host(const ChaosTower& tower, const HostProfile& host,
                       const TowerConfig& config) {
  if (tower.hosts_.count(host.host_id))
    throw Error(ErrorCode::DuplicateHost, "host already in tower", host.host_id);
  if (tower.by_address_.count(host.real_address))
    throw Error(ErrorCode::ConfigError, "duplicate real address", host.host_id);

  const double rl = compute_risk_level(host, config);
  const int bin = bin_for(tower.cuts_, rl);

  ChaosTower out = tower;
  out.hosts_.emplace(host.host_id, host);
  out.risk_.emplace(host.host_id, rl);
  out.by_address_.emplace(host.real_address, host.host_id);

  auto layer_it = std::find_if(out.layers_.begin(), out.layers_.end(),
                               [&](const Layer& l) { return l.bin == bin; });
  if (layer_it != out.layers_.end()) {
    for (const auto& gid : layer_it->groups) {
      auto& g = out.groups_.at(gid);
      if (g.attachment == host.attachment) {
        g.host_ids.insert(host.host_id);
        g.risk_level = std::max(g.risk_level, rl);
        out.host_group_.emplace(host.host_id, gid);
        return out;
      }
    }
  }

  Group g;
  g.group_id = "G" + std::to_string(out.next_group_number_++);
  g.attachment = host.attachment;
  g.host_ids.insert(host.host_id);
  g.risk_level = rl;
  out.host_group_.emplace(host.host_id, g.group_id);
  if (layer_it == out.layers_.end()) {
    out.layers_.push_back(Layer{bin, {g.group_id}});
  } else {
    layer_it->groups.push_back(g.group_id);
  }
  out.groups_.emplace(g.group_id, std::move(g));
  out.reindex_layers();
  return out;
}

int altitude(const ChaosTower& tower, const HostId& src, const HostId& dst) {
  return tower.layer_of(src) - tower.layer_of(dst);
}

Classification classify_connection(const ChaosTower& tower, const HostId& src,
                                   const HostId& dst, std::uint16_t dst_port,
                                   IdsVerdict verdict, Tick now) {
  const int alt = altitude(tower, src, dst);
  if (verdict == IdsVerdict::Normal && tower.whitelisted(src, dst, dst_port, now))
    return Classification::NormalExpected;
  if (verdict == IdsVerdict::Suspicious && alt > 0) return Classification::SpecialExpected;
  if (alt > 0) return Classification::UnexpectedDown;
  if (alt == 0) return Classification::UnexpectedLevel;
  return Classification::UnexpectedUp;
}

double leapfrog_risk(const ChaosTower& tower, const HostId& src, const HostId& dst) {
  const int alt = altitude(tower, src, dst);
  if (alt >= 0)
    throw Error(ErrorCode::NotAnUpwardConnection, "leapfrog risk needs an upward connection",
                src + "->" + dst);
  return static_cast<double>(-alt) / tower.height();
}

}  // namespace chaos
