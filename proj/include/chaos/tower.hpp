#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "chaos/address.hpp"

namespace chaos {

using HostId = std::string;
using GroupId = std::string;
using SwitchId = std::string;

struct VulnerabilityRecord {
  std::string vuln_id;
  std::string category;
  double cvss_base = 0.0;

  friend bool operator==(const VulnerabilityRecord&, const VulnerabilityRecord&) = default;
};

struct ServiceRecord {
  std::string service_name;
  std::uint16_t port = 0;
  Transport transport = Transport::TCP;
  std::string banner;

  friend bool operator==(const ServiceRecord&, const ServiceRecord&) = default;
};

struct HostProfile {
  HostId host_id;
  Address real_address;
  SwitchId attachment;
  std::vector<ServiceRecord> services;
  std::vector<VulnerabilityRecord> vulnerabilities;
  bool is_decoy = false;

  const ServiceRecord* find_service(Transport transport, std::uint16_t port) const;
  bool has_vulnerability(std::string_view vuln_id) const;

  friend bool operator==(const HostProfile&, const HostProfile&) = default;
};

enum class Binning { EqualWidth, Quantile };

std::string_view to_string(Binning b);

struct TowerConfig {
  double alpha = 0.5;
  double threshold = 0.5;
  double random_index = 0.5;
  std::map<std::string, double> siv_table;
  int layer_count = 3;
  Binning binning = Binning::EqualWidth;
  // Obfuscate same-layer connections instead of forwarding them.
  bool strict_intra_layer = false;

  /// Throws Error{ConfigError} naming the first violated field.
  void validate() const;

  friend bool operator==(const TowerConfig&, const TowerConfig&) = default;
};

/// Half-open tick interval [begin, end).
struct TickWindow {
  Tick begin = 0;
  Tick end = 0;
  bool contains(Tick t) const { return t >= begin && t < end; }

  friend bool operator==(const TickWindow&, const TickWindow&) = default;
};

/// Whitelisted service path as written in configuration, by host.
struct WhitelistRule {
  HostId src_host;
  HostId dst_host;
  std::uint16_t port = 0;
  std::optional<TickWindow> active;

  friend bool operator==(const WhitelistRule&, const WhitelistRule&) = default;
};

/// Whitelisted service path resolved against the tower's groups.
struct WhitelistEntry {
  GroupId src_group;
  GroupId dst_group;
  std::uint16_t dst_port = 0;
  std::optional<TickWindow> active;

  friend bool operator==(const WhitelistEntry&, const WhitelistEntry&) = default;
};

struct Group {
  GroupId group_id;
  std::set<HostId> host_ids;
  double risk_level = 0.0;
  int layer_index = 0;
  SwitchId attachment;

  friend bool operator==(const Group&, const Group&) = default;
};

struct Layer {
  // Bin index in the original layer_count binning; stays fixed across inserts.
  int bin = 0;
  std::vector<GroupId> groups;

  friend bool operator==(const Layer&, const Layer&) = default;
};

/// Immutable layered hierarchy of host groups. Index 0 is the bottom layer.
class ChaosTower {
 public:
  int height() const { return static_cast<int>(layers_.size()); }
  const std::vector<Layer>& layers() const { return layers_; }
  const std::map<GroupId, Group>& groups() const { return groups_; }
  const std::vector<WhitelistEntry>& whitelist() const { return whitelist_; }
  const TowerConfig& config() const { return config_; }
  const std::vector<double>& bin_cuts() const { return cuts_; }

  bool contains(const HostId& host) const { return hosts_.count(host) != 0; }
  const HostProfile& host(const HostId& host) const;
  const Group& group_of(const HostId& host) const;
  int layer_of(const HostId& host) const { return group_of(host).layer_index; }
  double risk_of(const HostId& host) const;
  std::optional<HostId> host_at(Address address) const;
  std::vector<HostId> host_ids() const;

  bool whitelisted(const HostId& src, const HostId& dst, std::uint16_t port, Tick now) const;

  /// Canonical structured-text form (sorted-key JSON).
  std::string dump() const;

  friend bool operator==(const ChaosTower&, const ChaosTower&) = default;

 private:
  friend ChaosTower build_tower(std::span<const HostProfile>, const TowerConfig&,
                                std::span<const WhitelistRule>);
  friend ChaosTower insert_host(const ChaosTower&, const HostProfile&, const TowerConfig&);

  void reindex_layers();

  TowerConfig config_;
  std::vector<Layer> layers_;
  std::map<GroupId, Group> groups_;
  std::vector<WhitelistEntry> whitelist_;
  std::map<HostId, HostProfile> hosts_;
  std::map<HostId, GroupId> host_group_;
  std::map<HostId, double> risk_;
  std::map<Address, HostId> by_address_;
  std::vector<double> cuts_;
  int next_group_number_ = 1;
};

double compute_risk_level(const HostProfile& host, const TowerConfig& config);

/// Decoys in `hosts` are skipped; whitelist rules naming unknown hosts throw.
ChaosTower build_tower(std::span<const HostProfile> hosts, const TowerConfig& config,
                       std::span<const WhitelistRule> whitelist = {});

ChaosTower insert_host(const ChaosTower& tower, const HostProfile& host,
                       const TowerConfig& config);

int altitude(const ChaosTower& tower, const HostId& src, const HostId& dst);

enum class IdsVerdict { Normal, Suspicious };

enum class Classification {
  NormalExpected,
  SpecialExpected,
  UnexpectedDown,
  UnexpectedLevel,
  UnexpectedUp,
};

std::string_view to_string(IdsVerdict v);
std::string_view to_string(Classification c);

Classification classify_connection(const ChaosTower& tower, const HostId& src,
                                   const HostId& dst, std::uint16_t dst_port,
                                   IdsVerdict verdict, Tick now = 0);

/// |altitude| / height for an upward connection.
double leapfrog_risk(const ChaosTower& tower, const HostId& src, const HostId& dst);

}  // namespace chaos
