// chaos: command-line front end for the CHAOS simulator.
//
//   chaos validate     --config FILE
//   chaos tower        --config FILE
//   chaos run          --config FILE [--mode M] [--seed N] [--scans K] [--out DIR]
//   chaos predict-load --layers L
//
// --config accepts a path or builtin:<name> (fig2, bintree-2..6, attack-ladder).

#include <filesystem>
#include <fstream>
#include <iostream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "chaos/error.hpp"
#include "chaos/experiment.hpp"
#include "chaos/scenario.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

chaos::Scenario load(const std::string& ref) {
  constexpr std::string_view kBuiltin = "builtin:";
  if (ref.starts_with(kBuiltin)) {
    auto s = chaos::reference_scenario(std::string_view(ref).substr(kBuiltin.size()));
    s.validate();
    return s;
  }
  return chaos::load_config(ref);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CHAOS moving-target-defense simulator"};
  app.require_subcommand(1);

  std::string config;
  std::string mode;
  std::uint64_t seed = 0;
  int scans = 0;
  int layers = 0;
  std::string out_dir;

  auto* validate = app.add_subcommand("validate", "Load and validate a scenario");
  validate->add_option("--config", config, "Scenario file or builtin:<name>")->required();

  auto* tower = app.add_subcommand("tower", "Print the Chaos Tower built from a scenario");
  tower->add_option("--config", config, "Scenario file or builtin:<name>")->required();

  auto* run = app.add_subcommand("run", "Run a scenario and emit metrics and traces");
  run->add_option("--config", config, "Scenario file or builtin:<name>")->required();
  auto* mode_opt = run->add_option("--mode", mode, "unprotected | static_mtd | chaos");
  auto* seed_opt = run->add_option("--seed", seed, "RNG seed");
  auto* scans_opt = run->add_option("--scans", scans, "Repeat count for every scan action")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Directory for metrics.csv, decisions.log, events.log, scan_report.txt");

  auto* predict = app.add_subcommand("predict-load", "Closed-form obfuscated connection counts");
  predict->add_option("--layers", layers, "Layer count L")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitValidation;
  }

  try {
    if (*predict) {
      const auto load = chaos::predicted_obfuscation_load(layers);
      fmt::print("layers,c_none,c_mtd,c_chaos\n{},{},{},{}\n", layers, load.none, load.mtd, load.chaos);
      return 0;
    }

    auto scenario = load(config);

    if (*validate) {
      fmt::print("ok {} hosts={} decoys={} switches={} actions={}\n", scenario.name, scenario.hosts.size(),
                 scenario.decoys.size(), scenario.switches.size(), scenario.workload.size());
      return 0;
    }
    if (*tower) {
      const auto t = chaos::build_tower(scenario.hosts, scenario.tower, scenario.whitelist);
      fmt::print("{}\n", t.dump());
      return 0;
    }

    if (*mode_opt) {
      auto m = chaos::parse_mode(mode);
      if (!m) throw chaos::Error(chaos::ErrorCode::ValidationError, "unknown mode '" + mode + "'", "mode");
      scenario.mode = *m;
    }
    if (*seed_opt) scenario.seed = seed;
    if (*scans_opt) {
      for (auto& a : scenario.workload) {
        if (a.kind != chaos::ActionKind::Exploit && a.kind != chaos::ActionKind::AllPairs &&
            a.kind != chaos::ActionKind::Flow)
          a.repeat = scans;
      }
    }

    const auto result = chaos::run_experiment(scenario);
    if (out_dir.empty()) {
      fmt::print("{}", result.metrics_csv());
      return 0;
    }
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_file(dir / "metrics.csv", result.metrics_csv());
    write_file(dir / "decisions.log", join_lines(result.decision_trace));
    write_file(dir / "events.log", join_lines(result.event_trace));
    write_file(dir / "scan_report.txt", result.result.report.serialize());
    fmt::print("{}", result.metrics_csv());
    return 0;
  } catch (const chaos::Error& e) {
    std::cerr << "error: " << e.what();
    if (!e.field().empty()) std::cerr << " [" << e.field() << "]";
    std::cerr << "\n";
    const bool validation = e.code() == chaos::ErrorCode::ValidationError ||
                            e.code() == chaos::ErrorCode::ParseError ||
                            e.code() == chaos::ErrorCode::InvalidLayerCount;
    return validation ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
