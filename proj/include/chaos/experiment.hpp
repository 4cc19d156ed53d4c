#pragma once

#include <memory>
#include <string>
#include <vector>

#include "chaos/controller.hpp"
#include "chaos/scanner.hpp"
#include "chaos/scenario.hpp"

namespace chaos {

/// A built network with its tower and controller wired together.
/// Not movable: the network holds pointers into the controller.
struct Simulation {
  ChaosTower tower;
  Network net;
  ChaosController controller;

  Simulation(const Scenario& scenario, Mode mode, std::uint64_t seed, NetworkOptions options);
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  GroundTruth truth() const;
};

std::unique_ptr<Simulation> make_simulation(const Scenario& scenario, Mode mode, std::uint64_t seed,
                                            NetworkOptions options = {});

struct ExploitRecord {
  Tick tick = 0;
  HostId from;
  HostId target;
  std::string vuln_id;
  int altitude = 0;
  ExploitOutcome outcome = ExploitOutcome::FailedDropped;
};

struct WorkloadResult {
  ScanReport report;
  std::size_t scans = 0;
  std::vector<ExploitRecord> exploits;
};

/// Runs every workload action in order, waiting for each action's start tick.
WorkloadResult run_workload(Simulation& sim, const Scenario& scenario);

struct MetricsRow {
  Mode mode = Mode::Chaos;
  std::uint64_t seed = 0;
  std::size_t scans = 0;
  std::optional<double> idp;  // empty when the baseline learned nothing
  std::size_t true_facts = 0;
  std::size_t baseline_facts = 0;
  OverheadMetrics overhead;
  std::size_t exploit_success = 0;
  std::size_t exploit_failed_decoy = 0;
  std::size_t exploit_failed_dropped = 0;
  std::size_t exploit_failed_not_vulnerable = 0;

  static std::string csv_header();
  std::string csv() const;
};

struct ExperimentOutput {
  MetricsRow row;
  WorkloadResult result;
  std::vector<std::string> decision_trace;
  std::vector<std::string> event_trace;

  std::string metrics_csv() const;
};

/// Runs the scenario in its own mode and, for the IDP denominator, once more
/// unprotected with the same seed and workload.
ExperimentOutput run_experiment(const Scenario& scenario);

}  // namespace chaos
