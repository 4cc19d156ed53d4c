#include <random>

#include "chaos/error.hpp"
#include "chaos/tower.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace chaos;
using testing::make_host;

namespace {

TowerConfig cvss_only(int layers) {
  TowerConfig c;
  c.alpha = 0.0;
  c.layer_count = layers;
  return c;
}

// Four single-host layers on separate switches, RL 1..4 with alpha 0.
ChaosTower four_layers(std::vector<WhitelistRule> wl = {}) {
  std::vector<HostProfile> hosts;
  for (int i = 0; i < 4; ++i)
    hosts.push_back(make_host("h" + std::to_string(i), Address(10, 0, 0, static_cast<std::uint8_t>(i + 1)),
                              "s" + std::to_string(i), {1.0 + i}));
  return build_tower(hosts, cvss_only(4), wl);
}

}  // namespace

TEST_CASE("risk level examples") {
  TowerConfig c;
  c.siv_table = {{"smb", 8.0}};
  auto h = make_host("a", Address(10, 0, 0, 1), "s1", {9.8}, {{"smb", 445, Transport::TCP, ""}});

  c.alpha = 1.0;
  CHECK(compute_risk_level(h, c) == doctest::Approx(8.0));
  c.alpha = 0.0;
  CHECK(compute_risk_level(h, c) == doctest::Approx(9.8));

  c.alpha = 0.5;
  auto two = make_host("b", Address(10, 0, 0, 2), "s1", {6.0, 4.0}, {{"smb", 445, Transport::TCP, ""}});
  CHECK(compute_risk_level(two, c) == doctest::Approx(13.0));

  auto none = make_host("c", Address(10, 0, 0, 3), "s1", {}, {{"smb", 445, Transport::TCP, ""}});
  CHECK(compute_risk_level(none, c) == 0.0);
}

TEST_CASE("risk level uses the highest SIV for every vulnerability") {
  TowerConfig c;
  c.alpha = 0.5;
  c.siv_table = {{"smb", 8.0}, {"http", 2.0}};
  auto h = make_host("a", Address(10, 0, 0, 1), "s1", {6.0, 4.0},
                     {{"http", 80, Transport::TCP, ""}, {"smb", 445, Transport::TCP, ""}});
  CHECK(compute_risk_level(h, c) == doctest::Approx(13.0));
}

TEST_CASE("risk level rejects bad inputs") {
  TowerConfig c;
  auto h = make_host("a", Address(10, 0, 0, 1), "s1", {5.0}, {{"ftp", 21, Transport::TCP, ""}});
  CHECK_THROWS_AS(compute_risk_level(h, c), Error);
  try {
    compute_risk_level(h, c);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownService);
  }
  auto bad = make_host("b", Address(10, 0, 0, 2), "s1", {11.0});
  try {
    compute_risk_level(bad, c);
    FAIL("expected InvalidScore");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidScore);
  }
}

TEST_CASE("risk level matches the oracle on random hosts") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    TowerConfig c;
    c.alpha = u(rng) / 10.0;
    c.siv_table = {{"a", u(rng)}, {"b", u(rng)}, {"c", u(rng)}};
    std::vector<double> cvss(rng() % 6);
    for (auto& x : cvss) x = u(rng);
    std::vector<ServiceRecord> services;
    for (const char* name : {"a", "b", "c"})
      if (rng() % 2) services.push_back({name, 1, Transport::TCP, ""});
    auto h = make_host("x", Address(10, 0, 0, 1), "s", cvss, services);
    CHECK(compute_risk_level(h, c) == doctest::Approx(testing::risk_oracle(h, c)).epsilon(1e-12));
  }
}

TEST_CASE("equal-width binning over three risk levels") {
  std::vector<HostProfile> hosts = {
      make_host("lo", Address(10, 0, 0, 1), "s1", {2.0}),
      make_host("mid", Address(10, 0, 0, 2), "s2", {5.0}),
      make_host("hi", Address(10, 0, 0, 3), "s3", {9.0}),
  };
  auto t = build_tower(hosts, cvss_only(3));
  CHECK(t.height() == 3);
  CHECK(t.layer_of("lo") == 0);
  CHECK(t.layer_of("mid") == 1);
  CHECK(t.layer_of("hi") == 2);
  REQUIRE(t.bin_cuts().size() == 2);
  CHECK(t.bin_cuts()[0] == doctest::Approx(2.0 + 7.0 / 3.0));
  CHECK(t.bin_cuts()[1] == doctest::Approx(2.0 + 14.0 / 3.0));
}

TEST_CASE("single host and identical scores give one layer") {
  std::vector<HostProfile> one = {make_host("a", Address(10, 0, 0, 1), "s1", {4.0})};
  CHECK(build_tower(one, cvss_only(3)).height() == 1);

  std::vector<HostProfile> same;
  for (int i = 0; i < 4; ++i)
    same.push_back(make_host("h" + std::to_string(i), Address(10, 0, 0, static_cast<std::uint8_t>(i + 1)),
                             "s" + std::to_string(i % 2), {5.0}));
  auto t = build_tower(same, cvss_only(3));
  CHECK(t.height() == 1);
  CHECK(t.groups().size() == 2);
}

TEST_CASE("empty layers are compacted") {
  std::vector<HostProfile> hosts = {
      make_host("a", Address(10, 0, 0, 1), "s1", {1.0}),
      make_host("b", Address(10, 0, 0, 2), "s2", {10.0}),
  };
  auto t = build_tower(hosts, cvss_only(5));
  CHECK(t.height() == 2);
  CHECK(t.layers()[0].bin == 0);
  CHECK(t.layers()[1].bin == 4);
}

TEST_CASE("quantile binning splits by rank") {
  std::vector<HostProfile> hosts;
  const double scores[] = {1.0, 1.1, 1.2, 9.0, 9.5, 10.0};
  for (int i = 0; i < 6; ++i)
    hosts.push_back(make_host("h" + std::to_string(i), Address(10, 0, 0, static_cast<std::uint8_t>(i + 1)),
                              "s" + std::to_string(i), {scores[i]}));
  auto c = cvss_only(3);
  c.binning = Binning::Quantile;
  auto t = build_tower(hosts, c);
  CHECK(t.height() == 3);
  CHECK(t.layer_of("h0") == 0);
  CHECK(t.layer_of("h1") == 0);
  CHECK(t.layer_of("h2") == 1);
  CHECK(t.layer_of("h3") == 1);
  CHECK(t.layer_of("h4") == 2);
  CHECK(t.layer_of("h5") == 2);
}

TEST_CASE("groups follow switches and are numbered from the top") {
  std::vector<HostProfile> hosts = {
      make_host("a", Address(10, 0, 0, 1), "s1", {1.0}),
      make_host("b", Address(10, 0, 0, 2), "s1", {1.0}),
      make_host("c", Address(10, 0, 0, 3), "s2", {1.0}),
      make_host("top", Address(10, 0, 0, 4), "s3", {9.0}),
  };
  auto t = build_tower(hosts, cvss_only(2));
  CHECK(t.group_of("top").group_id == "G1");
  CHECK(t.group_of("a").group_id == t.group_of("b").group_id);
  CHECK(t.group_of("a").group_id != t.group_of("c").group_id);
  CHECK(t.group_of("a").host_ids.size() == 2);
  CHECK(t.group_of("top").risk_level == doctest::Approx(9.0));
}

TEST_CASE("ordering property on random towers") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<HostProfile> hosts;
    const int n = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < n; ++i)
      hosts.push_back(make_host("h" + std::to_string(i), Address(10, 0, 1, static_cast<std::uint8_t>(i + 1)),
                                "s" + std::to_string(rng() % 4), {u(rng), u(rng)}));
    auto c = cvss_only(1 + static_cast<int>(rng() % 6));
    c.binning = trial % 2 ? Binning::Quantile : Binning::EqualWidth;
    auto t = build_tower(hosts, c);
    CHECK(t.height() <= c.layer_count);
    for (const auto& a : hosts) {
      for (const auto& b : hosts) {
        if (t.risk_of(a.host_id) < t.risk_of(b.host_id)) CHECK(t.layer_of(a.host_id) <= t.layer_of(b.host_id));
      }
    }
    for (const auto& layer : t.layers()) CHECK(!layer.groups.empty());
  }
}

TEST_CASE("insert_host joins or creates groups on fixed boundaries") {
  std::vector<HostProfile> hosts = {
      make_host("lo", Address(10, 0, 0, 1), "s1", {2.0}),
      make_host("mid", Address(10, 0, 0, 2), "s2", {5.0}),
      make_host("hi", Address(10, 0, 0, 3), "s3", {9.0}),
  };
  const auto c = cvss_only(3);
  auto t = build_tower(hosts, c);

  auto joined = insert_host(t, make_host("mid2", Address(10, 0, 0, 4), "s2", {5.5}), c);
  CHECK(joined.group_of("mid2").group_id == joined.group_of("mid").group_id);
  CHECK(joined.groups().size() == t.groups().size());

  auto fresh = insert_host(t, make_host("new", Address(10, 0, 0, 5), "s9", {5.5}), c);
  CHECK(fresh.layer_of("new") == 1);
  CHECK(fresh.group_of("new").group_id != fresh.group_of("mid").group_id);
  CHECK(fresh.groups().size() == t.groups().size() + 1);
  CHECK(fresh.bin_cuts() == t.bin_cuts());

  try {
    insert_host(t, make_host("mid", Address(10, 0, 0, 6), "s2", {5.0}), c);
    FAIL("expected DuplicateHost");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateHost);
  }
}

TEST_CASE("altitude examples") {
  auto t = four_layers();
  CHECK(altitude(t, "h3", "h1") == 2);
  CHECK(altitude(t, "h2", "h2") == 0);
  CHECK(altitude(t, "h0", "h3") == -3);
}

TEST_CASE("leapfrog risk examples") {
  auto t = four_layers();
  CHECK(leapfrog_risk(t, "h1", "h3") == doctest::Approx(0.5));
  CHECK(leapfrog_risk(t, "h0", "h1") == doctest::Approx(0.25));
  CHECK(leapfrog_risk(t, "h0", "h3") == doctest::Approx(0.75));
  try {
    leapfrog_risk(t, "h3", "h0");
    FAIL("expected NotAnUpwardConnection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotAnUpwardConnection);
  }
}

TEST_CASE("connection classification") {
  auto t = four_layers({{"h1", "h3", 3306, std::nullopt}});
  CHECK(classify_connection(t, "h1", "h3", 3306, IdsVerdict::Normal) == Classification::NormalExpected);
  CHECK(classify_connection(t, "h3", "h1", 22, IdsVerdict::Suspicious) == Classification::SpecialExpected);
  CHECK(classify_connection(t, "h1", "h3", 80, IdsVerdict::Normal) == Classification::UnexpectedUp);
  CHECK(classify_connection(t, "h3", "h1", 22, IdsVerdict::Normal) == Classification::UnexpectedDown);
  CHECK(classify_connection(t, "h2", "h2", 22, IdsVerdict::Normal) == Classification::UnexpectedLevel);
  CHECK(classify_connection(t, "h0", "h3", 22, IdsVerdict::Suspicious) == Classification::UnexpectedUp);
}

TEST_CASE("whitelist windows") {
  auto t = four_layers({{"h1", "h3", 3306, TickWindow{10, 20}}});
  CHECK_FALSE(t.whitelisted("h1", "h3", 3306, 5));
  CHECK(t.whitelisted("h1", "h3", 3306, 10));
  CHECK_FALSE(t.whitelisted("h1", "h3", 3306, 20));
  CHECK(classify_connection(t, "h1", "h3", 3306, IdsVerdict::Normal, 15) == Classification::NormalExpected);
  CHECK(classify_connection(t, "h1", "h3", 3306, IdsVerdict::Normal, 25) == Classification::UnexpectedUp);

  std::vector<WhitelistRule> bad = {{"h1", "nobody", 1, std::nullopt}};
  CHECK_THROWS_AS(four_layers(bad), Error);
}

TEST_CASE("dump is canonical") {
  auto a = four_layers();
  auto b = four_layers();
  CHECK(a == b);
  CHECK(a.dump() == b.dump());
  CHECK(a.dump().find("\"G1\"") != std::string::npos);
}

TEST_CASE("config validation names the field") {
  TowerConfig c;
  c.alpha = 1.5;
  try {
    c.validate();
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(e.field() == "alpha");
  }
  std::vector<HostProfile> none;
  try {
    build_tower(none, TowerConfig{});
    FAIL("expected EmptyNetwork");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyNetwork);
  }
}
