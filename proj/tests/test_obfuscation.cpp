#include <random>
#include <set>

#include "chaos/error.hpp"
#include "chaos/obfuscation.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace chaos;
using testing::make_host;

namespace {

const Address r1(10, 0, 0, 1);
const Address r2(10, 0, 0, 2);
const Address v1(198, 18, 0, 1);
const Address v2(198, 18, 0, 2);

Packet probe(Address src, Address dst, std::uint16_t port, Transport t = Transport::TCP) {
  Packet p;
  p.src = src;
  p.dst = dst;
  p.src_port = 40000;
  p.dst_port = port;
  p.transport = t;
  if (t == Transport::TCP) p.flags = static_cast<std::uint8_t>(Flag::Syn);
  if (t == Transport::ICMP) {
    p.flags = static_cast<std::uint8_t>(Flag::Echo);
    p.dst_port = p.src_port;
  }
  return p;
}

HostProfile target() {
  return make_host("t", r2, "s1", {}, {{"http", 80, Transport::TCP, "nginx"}, {"dns", 53, Transport::UDP, ""}});
}

MappingTable two_entry_table() {
  MappingTable t;
  t.forward = {{r1, v1}, {r2, v2}};
  t.reverse = {{v1, r1}, {v2, r2}};
  return t;
}

}  // namespace

TEST_CASE("decision table") {
  TowerConfig c;
  c.threshold = 0.5;
  c.random_index = 0.5;
  CHECK(decide(Classification::UnexpectedDown, 0.0, true, 0.1, c) == ObfuscationDecision::Forward);
  CHECK(decide(Classification::NormalExpected, 0.0, true, 0.1, c) == ObfuscationDecision::Forward);
  CHECK(decide(Classification::SpecialExpected, 0.0, true, 0.1, c) == ObfuscationDecision::Forward);
  CHECK(decide(Classification::UnexpectedUp, 0.25, true, 0.9, c) == ObfuscationDecision::PortObfuscate);
  CHECK(decide(Classification::UnexpectedUp, 0.25, true, 0.1, c) == ObfuscationDecision::RedirectToDecoy);
  CHECK(decide(Classification::UnexpectedUp, 0.75, true, 0.9, c) == ObfuscationDecision::Drop);
  CHECK(decide(Classification::UnexpectedUp, 0.25, false, 0.9, c) == ObfuscationDecision::RedirectToDecoy);
  CHECK(decide(Classification::UnexpectedUp, 0.5, true, 0.9, c) == ObfuscationDecision::PortObfuscate);
  CHECK(decide(Classification::UnexpectedLevel, 0.0, true, 0.9, c) == ObfuscationDecision::Forward);
  c.strict_intra_layer = true;
  CHECK(decide(Classification::UnexpectedLevel, 0.0, true, 0.9, c) == ObfuscationDecision::PortObfuscate);
}

TEST_CASE("mapping tables are injective and deterministic") {
  const std::vector<Address> reals = {r1, r2};
  const std::vector<Address> pool = {v1, v2, Address(198, 18, 0, 3), Address(198, 18, 0, 4)};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto t = rotate_mappings(reals, pool, 3, seed);
    CHECK(t.forward.size() == 2);
    CHECK(t.forward.at(r1) != t.forward.at(r2));
    CHECK(t == rotate_mappings(reals, pool, 3, seed));
    for (const auto& [r, v] : t.forward) CHECK(t.reverse.at(v) == r);
  }
}

TEST_CASE("many epochs never hand out a real address") {
  std::vector<Address> reals;
  for (std::uint8_t i = 1; i <= 20; ++i) reals.push_back(Address(10, 0, 0, i));
  const auto pool = make_virtual_pool(reals);
  const std::set<Address> real_set(reals.begin(), reals.end());
  std::set<std::vector<Address>> distinct;
  for (std::uint64_t e = 0; e < 1000; ++e) {
    auto t = rotate_mappings(reals, pool, e, 42);
    std::vector<Address> image;
    for (const auto& [r, v] : t.forward) {
      CHECK_FALSE(real_set.count(v));
      image.push_back(v);
    }
    distinct.insert(image);
  }
  CHECK(distinct.size() > 990);
}

TEST_CASE("pool errors") {
  const std::vector<Address> reals = {r1, r2};
  try {
    rotate_mappings(reals, std::vector<Address>{v1}, 0, 1);
    FAIL("expected PoolTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PoolTooSmall);
  }
  try {
    rotate_mappings(reals, std::vector<Address>{v1, v2, r1}, 0, 1);
    FAIL("expected PoolsOverlap");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PoolsOverlap);
  }
}

TEST_CASE("ingress and egress rewriting") {
  const auto table = two_entry_table();
  Packet p = probe(r1, r2, 80);
  p.payload_tag = "hello";
  const auto v = apply_ingress(p, table);
  CHECK(v.src == v1);
  CHECK(v.dst == v2);
  CHECK(v.payload_tag == "hello");
  CHECK(v.src_port == p.src_port);
  CHECK(v.dst_port == p.dst_port);
  CHECK(v.flags == p.flags);
  CHECK(apply_egress(v, table) == p);

  Packet stray = probe(r1, Address(10, 9, 9, 9), 80);
  try {
    apply_ingress(stray, table);
    FAIL("expected UnmappedAddress");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnmappedAddress);
  }
}

TEST_CASE("stale virtual packet against a later table") {
  std::vector<Address> reals = {r1, r2};
  const auto pool = make_virtual_pool(reals, 50);
  const auto t0 = rotate_mappings(reals, pool, 0, 9);
  const auto v = apply_ingress(probe(r1, r2, 80), t0);
  bool found = false;
  for (std::uint64_t e = 1; e < 50 && !found; ++e) {
    const auto te = rotate_mappings(reals, pool, e, 9);
    if (te.reverse.count(v.src) && te.reverse.count(v.dst)) continue;
    found = true;
    CHECK_THROWS_AS(apply_egress(v, te), Error);
  }
  CHECK(found);
}

TEST_CASE("host mutation pins a connection to its first epoch") {
  HostMutation m({r1, r2}, 5, 10);
  Packet req = probe(r1, r2, 80);
  Packet out = req;
  m.to_virtual(out, 1);
  CHECK(out.virtualized);
  CHECK(m.real_destination(out) == r2);
  const auto first = m.current();

  m.on_tick(25);
  CHECK(m.epoch() == 2);
  CHECK(m.rotations() == 1);

  Packet back = out;
  m.to_real(back);
  CHECK(back.src == r1);
  CHECK(back.dst == r2);

  Packet reply = probe(r2, r1, 40000);
  reply.src_port = 80;
  reply.flags = Flag::Syn | Flag::Ack;
  Packet vr = reply;
  m.to_virtual(vr, 25);
  CHECK(vr.src == first.forward.at(r2));
  CHECK(vr.dst == first.forward.at(r1));
  CHECK(m.pinned_epoch(reply) == 0u);

  Packet fresh = probe(r1, r2, 81);
  m.to_virtual(fresh, 26);
  CHECK(m.pinned_epoch(probe(r1, r2, 81)) == 2u);
}

TEST_CASE("scan reply synthesis") {
  ObfuscationConfig cfg;
  cfg.fake_rate = 0.5;
  const auto host = target();

  SUBCASE("closed port flipped open") {
    ReplyBuffer buf(100);
    auto r = synthesize_scan_reply(probe(r1, r2, 81), host, buf, 0.1, cfg, 0);
    CHECK(r.verdict == ReplyVerdict::FakeOpen);
    REQUIRE(r.reply);
    CHECK(r.reply->flags == (Flag::Syn | Flag::Ack));
    CHECK(r.reply->src == r2);
    CHECK(r.reply->ttl == cfg.synthetic_ttl);
    auto again = synthesize_scan_reply(probe(r1, r2, 81), host, buf, 0.9, cfg, 50);
    CHECK(again.replayed);
    CHECK(again.verdict == ReplyVerdict::FakeOpen);
    CHECK(again.reply == r.reply);
    auto late = synthesize_scan_reply(probe(r1, r2, 81), host, buf, 0.9, cfg, 100);
    CHECK(late.verdict == ReplyVerdict::Real);
  }
  SUBCASE("open port flipped closed") {
    ReplyBuffer buf;
    auto r = synthesize_scan_reply(probe(r1, r2, 80), host, buf, 0.1, cfg);
    CHECK(r.verdict == ReplyVerdict::FakeClosed);
    CHECK(r.reply->flags == (Flag::Rst | Flag::Ack));
  }
  SUBCASE("no flip passes through") {
    ReplyBuffer buf;
    auto r = synthesize_scan_reply(probe(r1, r2, 80), host, buf, 0.7, cfg);
    CHECK(r.verdict == ReplyVerdict::Real);
    CHECK_FALSE(r.reply);
  }
  SUBCASE("echo flip is silent") {
    ReplyBuffer buf;
    auto r = synthesize_scan_reply(probe(r1, r2, 0, Transport::ICMP), host, buf, 0.1, cfg);
    CHECK(r.verdict == ReplyVerdict::FakeClosed);
    CHECK_FALSE(r.reply);
  }
  SUBCASE("udp") {
    ReplyBuffer buf;
    auto open = synthesize_scan_reply(probe(r1, r2, 53, Transport::UDP), host, buf, 0.1, cfg);
    CHECK(open.reply->transport == Transport::ICMP);
    CHECK(open.reply->has(Flag::Unreachable));
    auto closed = synthesize_scan_reply(probe(r1, r2, 54, Transport::UDP), host, buf, 0.1, cfg);
    CHECK(closed.reply->transport == Transport::UDP);
    CHECK(closed.reply->has(Flag::Ack));
  }
  SUBCASE("fake open banner is empty") {
    ReplyBuffer buf;
    Packet p = probe(r1, r2, 81);
    p.payload_tag = "banner-request";
    auto r = synthesize_scan_reply(p, host, buf, 0.1, cfg);
    CHECK(r.reply->payload_tag == "banner:");
  }
  SUBCASE("non-probe packets are rejected") {
    ReplyBuffer buf;
    Packet p = probe(r1, r2, 80);
    p.flags = static_cast<std::uint8_t>(Flag::Ack);
    try {
      synthesize_scan_reply(p, host, buf, 0.1, cfg);
      FAIL("expected UnsupportedProbeType");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnsupportedProbeType);
    }
  }
}

TEST_CASE("a seeded sweep shows random closed ports as open") {
  ObfuscationConfig cfg;
  ReplyBuffer buf;
  std::mt19937_64 rng(3);
  const auto host = target();
  int fake_open = 0;
  for (std::uint16_t port = 1; port <= 1024; ++port) {
    const double draw = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    auto r = synthesize_scan_reply(probe(r1, r2, port), host, buf, draw, cfg);
    fake_open += r.verdict == ReplyVerdict::FakeOpen;
  }
  CHECK(fake_open > 400);
  CHECK(fake_open < 620);
}

TEST_CASE("decoy choice") {
  const std::vector<Address> pool = {Address(10, 0, 9, 1), Address(10, 0, 9, 2), Address(10, 0, 9, 3)};
  Packet p = probe(r1, r2, 445);
  const auto d = choose_decoy(p, pool, 7);
  CHECK(d == choose_decoy(p, pool, 7));
  auto q = redirect_to_decoy(p, pool, 7);
  CHECK(q.dst == d);
  CHECK(q.src == p.src);
  CHECK(q.dst_port == p.dst_port);

  std::set<Address> used;
  for (std::uint16_t port = 1; port < 200; ++port) used.insert(choose_decoy(probe(r1, r2, port), pool, 7));
  CHECK(used.size() == 3);

  try {
    choose_decoy(p, std::vector<Address>{}, 7);
    FAIL("expected NoDecoysConfigured");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoDecoysConfigured);
  }
}
