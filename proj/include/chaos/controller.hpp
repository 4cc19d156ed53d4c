#pragma once

#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "chaos/ids.hpp"
#include "chaos/netsim.hpp"
#include "chaos/obfuscation.hpp"
#include "chaos/tower.hpp"

namespace chaos {

enum class Mode { Unprotected, StaticMTD, Chaos };

std::string_view to_string(Mode m);
std::optional<Mode> parse_mode(std::string_view text);

/// One controller decision, the audit record for every packet-in.
struct DecisionRecord {
  Tick tick = 0;
  std::uint64_t packet_id = 0;
  Address src;
  std::uint16_t src_port = 0;
  Address dst;
  std::uint16_t dst_port = 0;
  Transport transport = Transport::TCP;
  bool is_request = true;
  IdsVerdict ids = IdsVerdict::Normal;
  std::optional<Classification> classification;
  int altitude = 0;
  double leapfrog = 0.0;
  ObfuscationDecision decision = ObfuscationDecision::Forward;
  std::optional<ReplyVerdict> verdict;
  double draw = 0.0;

  std::string line() const;
};

struct ControllerSettings {
  Mode mode = Mode::Chaos;
  ObfuscationConfig obfuscation;
  IdsThresholds ids;
  std::uint64_t seed = 1;
};

/// The CHAOS application: host mutation for every connection, Chaos Tower
/// classification, and port/decoy obfuscation of unexpected connections.
/// In StaticMTD mode every request is port-obfuscated regardless of the tower.
class ChaosController : public Controller {
 public:
  ChaosController(const ChaosTower& tower, std::vector<HostProfile> decoys,
                  ControllerSettings settings);

  void on_start(Network& net) override;
  void on_tick(Network& net) override;
  void on_packet_in(Network& net, const PacketIn& event) override;

  const std::vector<DecisionRecord>& decisions() const { return decisions_; }
  /// Distinct connections (by initiator endpoint) that were not forwarded as-is.
  std::size_t obfuscated_connections() const { return obfuscated_.size(); }
  const HostMutation* mutation() const { return mutation_.get(); }
  const ReplyBuffer& buffer() const { return buffer_; }
  Ids& ids() { return ids_; }
  Mode mode() const { return settings_.mode; }

 private:
  double next_draw();
  void install_proactive(Network& net, const HostId& src);
  void forward(Network& net, const PacketIn& event, Packet p);
  void record(Network& net, DecisionRecord rec);

  const ChaosTower& tower_;
  std::vector<HostProfile> decoys_;
  std::vector<Address> decoy_pool_;
  ControllerSettings settings_;
  std::mt19937_64 rng_;
  Ids ids_;
  ReplyBuffer buffer_;
  std::unique_ptr<HostMutation> mutation_;
  std::map<HostId, IdsVerdict> last_verdict_;
  // (initiator address, initiator port, tick the connection opened)
  std::set<std::tuple<Address, std::uint16_t, Tick>> obfuscated_;
  std::vector<DecisionRecord> decisions_;
};

}  // namespace chaos
