#include "chaos/error.hpp"
#include "chaos/experiment.hpp"
#include "chaos/scanner.hpp"
#include "doctest.h"

using namespace chaos;

namespace {

std::vector<HostId> others(const Simulation& sim, const HostId& self) {
  std::vector<HostId> out;
  for (const auto& h : sim.tower.host_ids())
    if (h != self) out.push_back(h);
  return out;
}

// Counts report facts confirmed by the host profiles, without GroundTruth.
std::size_t facts_oracle(const ScanReport& r, const std::vector<HostProfile>& hosts) {
  std::size_t n = 0;
  for (const auto& h : hosts) {
    if (h.is_decoy) continue;
    n += r.observed_live.count(h.host_id);
    for (const auto& s : h.services) {
      auto it = r.observed_ports.find({h.host_id, s.transport, s.port});
      if (it != r.observed_ports.end() && it->second == PortState::Open) ++n;
      auto b = r.observed_banners.find({h.host_id, s.port});
      if (s.transport == Transport::TCP && b != r.observed_banners.end() && !s.banner.empty() &&
          b->second == s.banner)
        ++n;
    }
  }
  return n;
}

}  // namespace

TEST_CASE("port list parsing") {
  CHECK(parse_port_list("1-3,80,2") == std::vector<std::uint16_t>{1, 2, 3, 80});
  CHECK(parse_port_list("").empty());
  CHECK_THROWS_AS(parse_port_list("0"), Error);
  CHECK_THROWS_AS(parse_port_list("9-3"), Error);
  CHECK_THROWS_AS(parse_port_list("x"), Error);
}

TEST_CASE("ground truth comes from profiles only") {
  const auto s = reference_scenario("fig2");
  auto all = s.hosts;
  all.insert(all.end(), s.decoys.begin(), s.decoys.end());
  const auto t = GroundTruth::from_profiles(all);
  CHECK(t.live_hosts.size() == s.hosts.size());
  CHECK_FALSE(t.live_hosts.count("decoy1"));
  CHECK(t.open_ports.count({"db1", Transport::TCP, 3306}));
  CHECK(t.banners.at({"web1", 80}) == "Apache/2.2.15 (CentOS)");
}

TEST_CASE("information disclosure ratio") {
  GroundTruth truth;
  for (int i = 0; i < 10; ++i) truth.live_hosts.insert("h" + std::to_string(i));
  ScanReport baseline;
  baseline.observed_live = truth.live_hosts;
  ScanReport partial;
  partial.observed_live = {"h0", "h1", "h2", "ghost"};
  partial.observed_ports[{"h3", Transport::TCP, 80}] = PortState::Open;

  CHECK(information_disclosure(baseline, truth, baseline) == 1.0);
  CHECK(information_disclosure(partial, truth, baseline) == doctest::Approx(0.3));
  CHECK(information_disclosure(ScanReport{}, truth, baseline) == 0.0);
  try {
    information_disclosure(partial, truth, ScanReport{});
    FAIL("expected ZeroBaseline");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroBaseline);
  }
}

TEST_CASE("unprotected scans see the truth") {
  const auto s = reference_scenario("fig2");
  auto sim = make_simulation(s, Mode::Unprotected, 1);
  Scanner sc(sim->net, "byod1", sim->truth());
  const auto targets = others(*sim, "byod1");

  auto live = sc.ping_sweep(std::span(targets).first(7));
  CHECK(live.observed_live.size() == 7);
  CHECK(sc.ping_sweep({}).observed_live.empty());

  const auto ports = parse_port_list("1-1024,3306,3389");
  auto scan = sc.port_scan(targets, ports);
  for (const auto& t : targets) {
    for (auto port : ports) {
      const bool open = sim->net.host(t).find_service(Transport::TCP, port) != nullptr;
      CHECK(scan.observed_ports.at({t, Transport::TCP, port}) == (open ? PortState::Open : PortState::Closed));
    }
  }
  CHECK(sc.fingerprint("web1", 80).observed_banners.at({"web1", 80}) == "Apache/2.2.15 (CentOS)");

  auto full = sc.full_scan(targets, ports);
  CHECK(full.true_fact_count == sc.truth().fact_count() - 1);  // byod1 is not scanned
  CHECK(full.true_fact_count == facts_oracle(full, s.hosts));
}

TEST_CASE("protected sweeps learn a subset of the truth") {
  const auto s = reference_scenario("fig2");
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto sim = make_simulation(s, Mode::Chaos, seed);
    Scanner sc(sim->net, "byod1", sim->truth());
    const auto targets = others(*sim, "byod1");
    auto r = sc.ping_sweep(targets);
    for (const auto& h : r.observed_live) CHECK(sc.truth().live_hosts.count(h));
    CHECK_FALSE(r.observed_live.count("db1"));
    CHECK(r.observed_live.count("byod2"));
  }
}

TEST_CASE("port obfuscation shows closed ports as open and stays consistent") {
  const auto s = reference_scenario("fig2");
  auto sim = make_simulation(s, Mode::StaticMTD, 3);
  Scanner sc(sim->net, "byod1", sim->truth());
  const auto ports = parse_port_list("1-1024");
  auto first = sc.port_scan("ws1", ports);
  std::size_t fake_open = 0;
  for (const auto& [f, st] : first.observed_ports)
    if (st == PortState::Open && !sim->net.host("ws1").find_service(f.transport, f.port)) ++fake_open;
  CHECK(fake_open > 300);
  auto second = sc.port_scan("ws1", ports);
  CHECK(first.serialize() == second.serialize());
}

TEST_CASE("fingerprints of fake and redirected ports") {
  const auto s = reference_scenario("fig2");
  bool saw_decoy = false;
  bool saw_fake = false;
  for (std::uint64_t seed = 1; seed <= 40 && !(saw_decoy && saw_fake); ++seed) {
    auto sim = make_simulation(s, Mode::Chaos, seed);
    Scanner sc(sim->net, "byod1", sim->truth());
    auto r = sc.fingerprint("ws1", 8080);
    const auto& d = sim->controller.decisions().front();
    if (d.decision == ObfuscationDecision::RedirectToDecoy) {
      saw_decoy = true;
      REQUIRE(r.observed_banners.count({"ws1", 8080}));
      CHECK(r.observed_banners.at({"ws1", 8080}) == "Apache Tomcat/Coyote JSP engine 1.1");
      CHECK(r.true_fact_count == 0);
    } else if (d.verdict == ReplyVerdict::FakeOpen) {
      saw_fake = true;
      CHECK(r.observed_banners.empty());
    }
  }
  CHECK(saw_decoy);
  CHECK(saw_fake);
}

TEST_CASE("exploit outcomes") {
  const auto s = reference_scenario("fig2");
  {
    auto sim = make_simulation(s, Mode::Unprotected, 1);
    Scanner sc(sim->net, "byod1", sim->truth());
    CHECK(sc.exploit_attempt("ws1", 445, "MS08-067") == ExploitOutcome::Success);
    CHECK(sc.exploit_attempt("web1", 80, "MS08-067") == ExploitOutcome::FailedNotVulnerable);
    try {
      sc.exploit_attempt("ws1", 445, "CVE-0000-0000");
      FAIL("expected UnknownVulnId");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownVulnId);
    }
  }
  {
    auto sim = make_simulation(s, Mode::Chaos, 1);
    Scanner sc(sim->net, "byod1", sim->truth());
    CHECK(sc.exploit_attempt("db1", 3306, "CVE-2016-6662") == ExploitOutcome::FailedDropped);
  }
  bool saw_decoy = false;
  for (std::uint64_t seed = 1; seed <= 40 && !saw_decoy; ++seed) {
    auto sim = make_simulation(s, Mode::Chaos, seed);
    Scanner sc(sim->net, "byod1", sim->truth());
    const auto outcome = sc.exploit_attempt("ws1", 445, "MS08-067");
    if (outcome != ExploitOutcome::FailedDecoy) continue;
    saw_decoy = true;
    REQUIRE(sim->net.host_events().size() == 1);
    CHECK(sim->net.host_events()[0].kind == HostEvent::Kind::DecoyAlert);
  }
  CHECK(saw_decoy);
}

TEST_CASE("overhead metrics") {
  const auto s = reference_scenario("fig2");
  auto sim = make_simulation(s, Mode::Unprotected, 1);
  Scanner sc(sim->net, "byod1", sim->truth());
  const auto targets = others(*sim, "byod1");
  sc.ping_sweep(targets);
  const auto m = overhead_metrics(sim->net, sim->controller.obfuscated_connections());
  CHECK(m.obfuscated_connections == 0);
  CHECK(m.controller_ops == 0);
  // Seven targets three switches away (6 ticks round trip), byod2 on the same switch (2).
  CHECK(m.mean_delay_ticks == doctest::Approx((7 * 6 + 2) / 8.0));
}

TEST_CASE("scan report serialization is canonical") {
  ScanReport a;
  a.observed_live = {"b", "a"};
  a.observed_ports[{"a", Transport::TCP, 22}] = PortState::Closed;
  a.observed_banners[{"a", 80}] = "x";
  a.elapsed_ticks = 3;
  ScanReport b;
  b.observed_banners[{"a", 80}] = "x";
  b.observed_ports[{"a", Transport::TCP, 22}] = PortState::Closed;
  b.observed_live = {"a", "b"};
  b.elapsed_ticks = 3;
  CHECK(a.serialize() == b.serialize());
  CHECK(a.serialize().find("port a tcp 22 closed") != std::string::npos);

  ScanReport later;
  later.observed_ports[{"a", Transport::TCP, 22}] = PortState::Open;
  later.elapsed_ticks = 2;
  a.merge(later);
  CHECK(a.observed_ports.at({"a", Transport::TCP, 22}) == PortState::Open);
  CHECK(a.elapsed_ticks == 5);
}
