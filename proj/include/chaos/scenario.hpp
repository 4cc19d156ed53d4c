#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "chaos/controller.hpp"
#include "chaos/ids.hpp"
#include "chaos/obfuscation.hpp"
#include "chaos/tower.hpp"

namespace chaos {

struct Link {
  SwitchId a;
  SwitchId b;

  friend bool operator==(const Link&, const Link&) = default;
};

enum class ActionKind { PingSweep, PortScan, Fingerprint, FullScan, Exploit, AllPairs, Flow };

std::string_view to_string(ActionKind k);
std::optional<ActionKind> parse_action(std::string_view text);

/// One scheduled workload step. `targets` empty means every tower host other
/// than the actor.
struct WorkloadAction {
  ActionKind kind = ActionKind::FullScan;
  Tick at = 0;
  HostId from;
  std::vector<HostId> targets;
  std::string ports = "1-1024";
  Transport transport = Transport::TCP;
  std::uint16_t port = 0;
  std::string vuln_id;
  std::string payload;
  int repeat = 1;

  friend bool operator==(const WorkloadAction&, const WorkloadAction&) = default;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 1;
  Mode mode = Mode::Chaos;
  TowerConfig tower;
  ObfuscationConfig obfuscation;
  IdsThresholds ids;
  Tick response_timeout = 16;
  double controller_cost = 1.0;
  std::vector<SwitchId> switches;
  std::vector<Link> links;
  std::vector<HostProfile> hosts;
  std::vector<HostProfile> decoys;
  std::vector<WhitelistRule> whitelist;
  std::vector<WorkloadAction> workload;

  /// Throws Error{ValidationError} whose field() names the violated invariant.
  void validate() const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Parses a JSON scenario document and validates it.
/// Throws Error{ParseError} (with line/field) or Error{ValidationError}.
Scenario parse_config(std::string_view text);
Scenario load_config(const std::filesystem::path& path);
std::string serialize(const Scenario& scenario);

std::vector<std::string> reference_scenario_names();
/// "fig2", "bintree-2" .. "bintree-6", "attack-ladder".
Scenario reference_scenario(std::string_view name);
Scenario bintree_scenario(int layers);

struct ObfuscationLoad {
  std::uint64_t none = 0;
  std::uint64_t mtd = 0;
  std::uint64_t chaos = 0;

  friend bool operator==(const ObfuscationLoad&, const ObfuscationLoad&) = default;
};

/// Closed-form obfuscated connection counts for a complete binary tree of
/// groups with L layers. Throws InvalidLayerCount outside [1, 32].
ObfuscationLoad predicted_obfuscation_load(int layers);

}  // namespace chaos
