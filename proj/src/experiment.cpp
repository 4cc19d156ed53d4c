#include "chaos/experiment.hpp"

#include <fmt/format.h>

#include "chaos/error.hpp"

namespace chaos {

Simulation::Simulation(const Scenario& scenario, Mode mode, std::uint64_t seed, NetworkOptions options)
    : tower(build_tower(scenario.hosts, scenario.tower, scenario.whitelist)),
      net(options),
      controller(tower, scenario.decoys, ControllerSettings{mode, scenario.obfuscation, scenario.ids, seed}) {
  for (const auto& sw : scenario.switches) net.add_switch(sw);
  for (const auto& l : scenario.links) net.add_link(l.a, l.b);
  for (const auto& h : scenario.hosts) net.add_host(h);
  for (const auto& d : scenario.decoys) net.add_host(d);
  net.set_controller(&controller);
}

GroundTruth Simulation::truth() const {
  std::vector<HostProfile> hosts;
  for (const auto& id : tower.host_ids()) hosts.push_back(tower.host(id));
  return GroundTruth::from_profiles(hosts);
}

std::unique_ptr<Simulation> make_simulation(const Scenario& scenario, Mode mode, std::uint64_t seed,
                                            NetworkOptions options) {
  return std::make_unique<Simulation>(scenario, mode, seed, options);
}

WorkloadResult run_workload(Simulation& sim, const Scenario& scenario) {
  WorkloadResult out;
  const GroundTruth truth = sim.truth();
  std::map<HostId, std::unique_ptr<Scanner>> scanners;
  auto scanner_for = [&](const HostId& id) -> Scanner& {
    auto& s = scanners[id];
    if (!s) s = std::make_unique<Scanner>(sim.net, id, truth, scenario.response_timeout);
    return *s;
  };
  std::uint16_t client_port = 30000;
  auto next_client_port = [&] {
    client_port = client_port >= 60000 ? 30001 : static_cast<std::uint16_t>(client_port + 1);
    return client_port;
  };

  const auto all_hosts = sim.tower.host_ids();
  for (const auto& action : scenario.workload) {
    if (sim.net.now() < action.at) sim.net.run(action.at - sim.net.now());

    std::vector<HostId> targets = action.targets;
    if (targets.empty()) {
      for (const auto& h : all_hosts)
        if (h != action.from || action.kind == ActionKind::AllPairs) targets.push_back(h);
    }
    const auto ports = parse_port_list(action.ports);

    for (int rep = 0; rep < action.repeat; ++rep) {
      switch (action.kind) {
        case ActionKind::PingSweep:
          out.report.merge(scanner_for(action.from).ping_sweep(targets));
          ++out.scans;
          break;
        case ActionKind::PortScan:
          out.report.merge(scanner_for(action.from).port_scan(targets, ports, action.transport));
          ++out.scans;
          break;
        case ActionKind::Fingerprint:
          for (const auto& t : targets) out.report.merge(scanner_for(action.from).fingerprint(t, action.port));
          ++out.scans;
          break;
        case ActionKind::FullScan:
          out.report.merge(scanner_for(action.from).full_scan(targets, ports));
          ++out.scans;
          break;
        case ActionKind::Exploit:
          for (const auto& t : targets) {
            ExploitRecord rec;
            rec.tick = sim.net.now();
            rec.from = action.from;
            rec.target = t;
            rec.vuln_id = action.vuln_id;
            rec.altitude = altitude(sim.tower, action.from, t);
            rec.outcome = scanner_for(action.from).exploit_attempt(t, action.port, action.vuln_id);
            out.exploits.push_back(std::move(rec));
          }
          break;
        case ActionKind::AllPairs:
        case ActionKind::Flow: {
          const std::vector<HostId> sources =
              action.kind == ActionKind::AllPairs ? targets : std::vector<HostId>{action.from};
          for (const auto& src : sources) {
            for (const auto& dst : targets) {
              if (src == dst) continue;
              Packet p;
              p.src = sim.net.host(src).real_address;
              p.dst = sim.net.host(dst).real_address;
              p.transport = action.transport;
              p.src_port = next_client_port();
              p.dst_port = action.port;
              if (action.transport == Transport::TCP) p.flags = static_cast<std::uint8_t>(Flag::Syn);
              p.payload_tag = action.payload;
              sim.net.send(src, std::move(p));
            }
          }
          sim.net.run(scenario.response_timeout);
          for (const auto& h : sim.net.host_ids()) sim.net.take_inbox(h);
          break;
        }
      }
    }
  }
  out.report.true_fact_count = count_true_facts(out.report, truth);
  return out;
}

std::string MetricsRow::csv_header() {
  return "mode,seed,scans,idp,true_facts,baseline_facts,controller_ops,obfuscated_connections,"
         "mean_delay_ticks,exploit_success,exploit_failed_decoy,exploit_failed_dropped,"
         "exploit_failed_not_vulnerable";
}

std::string MetricsRow::csv() const {
  return fmt::format("{},{},{},{},{},{},{},{},{:.4f},{},{},{},{}", to_string(mode), seed, scans,
                     idp ? fmt::format("{:.6f}", *idp) : std::string("NA"), true_facts, baseline_facts,
                     overhead.controller_ops, overhead.obfuscated_connections, overhead.mean_delay_ticks,
                     exploit_success, exploit_failed_decoy, exploit_failed_dropped,
                     exploit_failed_not_vulnerable);
}

std::string ExperimentOutput::metrics_csv() const { return MetricsRow::csv_header() + "\n" + row.csv() + "\n"; }

namespace {

std::vector<std::string> event_lines(const Simulation& sim, const WorkloadResult& result) {
  std::vector<std::string> lines;
  for (const auto& e : sim.net.host_events()) {
    lines.push_back(fmt::format("{} {} host={} from={} vuln={} pkt={}", e.tick,
                                e.kind == HostEvent::Kind::DecoyAlert ? "decoy_alert" : "compromised", e.host,
                                e.from.to_string(), e.vuln_id, e.packet_id));
  }
  for (const auto& x : result.exploits) {
    lines.push_back(fmt::format("{} exploit from={} target={} vuln={} altitude={} outcome={}", x.tick, x.from,
                                x.target, x.vuln_id, x.altitude, to_string(x.outcome)));
  }
  lines.push_back(fmt::format("trace_hash {:016x}", sim.net.trace_hash()));
  return lines;
}

}  // namespace

ExperimentOutput run_experiment(const Scenario& scenario) {
  scenario.validate();
  ExperimentOutput out;
  auto sim = make_simulation(scenario, scenario.mode, scenario.seed);
  out.result = run_workload(*sim, scenario);

  std::size_t baseline_facts = out.result.report.true_fact_count;
  if (scenario.mode != Mode::Unprotected) {
    auto base = make_simulation(scenario, Mode::Unprotected, scenario.seed);
    baseline_facts = run_workload(*base, scenario).report.true_fact_count;
  }

  auto& row = out.row;
  row.mode = scenario.mode;
  row.seed = scenario.seed;
  row.scans = out.result.scans;
  row.true_facts = out.result.report.true_fact_count;
  row.baseline_facts = baseline_facts;
  if (baseline_facts > 0) row.idp = static_cast<double>(row.true_facts) / static_cast<double>(baseline_facts);
  row.overhead = overhead_metrics(sim->net, sim->controller.obfuscated_connections(), scenario.controller_cost);
  for (const auto& x : out.result.exploits) {
    switch (x.outcome) {
      case ExploitOutcome::Success: ++row.exploit_success; break;
      case ExploitOutcome::FailedDecoy: ++row.exploit_failed_decoy; break;
      case ExploitOutcome::FailedDropped: ++row.exploit_failed_dropped; break;
      case ExploitOutcome::FailedNotVulnerable: ++row.exploit_failed_not_vulnerable; break;
    }
  }

  for (const auto& d : sim->controller.decisions()) out.decision_trace.push_back(d.line());
  out.event_trace = event_lines(*sim, out.result);
  return out;
}

}  // namespace chaos
