#include "chaos/controller.hpp"

#include <fmt/format.h>

#include "chaos/error.hpp"

namespace chaos {

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Unprotected: return "unprotected";
    case Mode::StaticMTD: return "static_mtd";
    case Mode::Chaos: return "chaos";
  }
  return "?";
}

std::optional<Mode> parse_mode(std::string_view text) {
  if (text == "unprotected" || text == "none") return Mode::Unprotected;
  if (text == "static_mtd" || text == "mtd") return Mode::StaticMTD;
  if (text == "chaos") return Mode::Chaos;
  return std::nullopt;
}

std::string DecisionRecord::line() const {
  return fmt::format(
      "tick={} pkt={} flow={}:{}>{}:{}/{} req={} ids={} class={} altitude={} leapfrog={:.4f} "
      "decision={} verdict={} draw={:.6f}",
      tick, packet_id, src.to_string(), src_port, dst.to_string(), dst_port, to_string(transport),
      is_request ? 1 : 0, to_string(ids), classification ? to_string(*classification) : "-",
      altitude, leapfrog, to_string(decision), verdict ? to_string(*verdict) : "-", draw);
}

namespace {
constexpr int kBasePriority = 0;
constexpr int kInspectPriority = 5;
constexpr int kProactivePriority = 10;
constexpr int kRedirectPriority = 30;
}  // namespace

ChaosController::ChaosController(const ChaosTower& tower, std::vector<HostProfile> decoys,
                                 ControllerSettings settings)
    : tower_(tower),
      decoys_(std::move(decoys)),
      settings_(settings),
      rng_(hash_combine(settings.seed, 0xc4a05)),
      ids_(settings.ids),
      buffer_(settings.obfuscation.buffer_window) {
  settings_.obfuscation.validate();
  for (const auto& d : decoys_) decoy_pool_.push_back(d.real_address);
}

double ChaosController::next_draw() {
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

void ChaosController::on_start(Network& net) {
  net.set_tap([this](const HostId&, const Packet& p, Tick now) { ids_.observe(p, now); });

  for (const auto& sw : net.switch_ids()) {
    FlowEntry base;
    base.priority = kBasePriority;
    base.actions = {Normal{}};
    base.cookie = "base";
    net.install_flow(sw, std::move(base));
  }
  if (settings_.mode == Mode::Unprotected) return;

  std::vector<Address> reals;
  for (const auto& id : net.host_ids()) reals.push_back(net.host(id).real_address);
  mutation_ = std::make_unique<HostMutation>(std::move(reals), hash_combine(settings_.seed, 0x6d7574),
                                             settings_.obfuscation.ticks_per_epoch);
  net.set_translator(mutation_.get());

  for (const auto& h : tower_.host_ids()) {
    if (!net.host_at(tower_.host(h).real_address)) continue;
    FlowEntry inspect;
    inspect.match.src = tower_.host(h).real_address;
    inspect.priority = kInspectPriority;
    inspect.actions = {SendToController{}};
    inspect.cookie = "ctl:" + h;
    net.install_flow(tower_.host(h).attachment, std::move(inspect));
    if (settings_.mode == Mode::Chaos) install_proactive(net, h);
  }
}

void ChaosController::install_proactive(Network& net, const HostId& src) {
  const auto& profile = tower_.host(src);
  for (const auto& dst : tower_.host_ids()) {
    if (dst == src || !net.host_at(tower_.host(dst).real_address)) continue;
    const int alt = altitude(tower_, src, dst);
    if (alt < 0 || (alt == 0 && tower_.config().strict_intra_layer)) continue;
    FlowEntry e;
    e.match.src = profile.real_address;
    e.match.dst = tower_.host(dst).real_address;
    e.priority = kProactivePriority;
    e.actions = {Normal{}};
    e.cookie = "pro:" + src;
    net.install_flow(profile.attachment, std::move(e));
  }
}

void ChaosController::on_tick(Network& net) {
  if (mutation_) mutation_->on_tick(net.now());
  if (settings_.mode != Mode::Chaos) return;

  // A source the IDS flags loses its data-plane shortcuts so that every one
  // of its connections is classified (and logged) by the controller.
  for (const auto& h : tower_.host_ids()) {
    const auto& profile = tower_.host(h);
    if (!net.host_at(profile.real_address)) continue;
    const auto v = ids_.verdict(profile.real_address, net.now());
    auto [it, inserted] = last_verdict_.try_emplace(h, IdsVerdict::Normal);
    if (it->second == v) continue;
    it->second = v;
    net.log(fmt::format("ids_verdict {} {}", h, to_string(v)));
    if (v == IdsVerdict::Suspicious) {
      net.remove_flows(profile.attachment, "pro:" + h);
    } else {
      install_proactive(net, h);
    }
  }
}

void ChaosController::forward(Network& net, const PacketIn& event, Packet p) {
  auto port = net.route_port(event.switch_id, p.dst);
  if (!port) {
    net.drop(p, FateKind::DroppedPolicy);
    return;
  }
  net.packet_out(event.switch_id, *port, std::move(p));
}

void ChaosController::record(Network& net, DecisionRecord rec) {
  net.log("decision " + rec.line());
  decisions_.push_back(std::move(rec));
}

void ChaosController::on_packet_in(Network& net, const PacketIn& event) {
  const Packet& p = event.packet;
  const Tick now = net.now();

  DecisionRecord rec;
  rec.tick = now;
  rec.packet_id = p.id;
  rec.src = p.src;
  rec.src_port = p.src_port;
  rec.dst = p.dst;
  rec.dst_port = p.dst_port;
  rec.transport = p.transport;
  rec.is_request = p.is_request();
  if (settings_.mode == Mode::Chaos) rec.draw = next_draw();

  const auto src_host = tower_.host_at(p.src);
  const auto dst_host = tower_.host_at(p.dst);

  if (!net.host_at(p.dst)) {
    rec.decision = ObfuscationDecision::Drop;
    record(net, rec);
    net.drop(p, FateKind::DroppedPolicy);
    return;
  }

  if (!rec.is_request) {
    // Responses belong to the connection their destination opened.
    if (settings_.mode == Mode::Chaos && src_host && dst_host) {
      rec.ids = ids_.verdict(p.dst, now);
      rec.classification = classify_connection(tower_, *dst_host, *src_host, p.src_port, rec.ids, now);
      rec.altitude = altitude(tower_, *dst_host, *src_host);
    }
    rec.decision = ObfuscationDecision::Forward;
    record(net, rec);
    forward(net, event, p);
    return;
  }

  if (!src_host || !dst_host) {
    // Traffic to or from hosts outside the tower (decoys) is not obfuscated.
    rec.decision = ObfuscationDecision::Forward;
    record(net, rec);
    forward(net, event, p);
    return;
  }

  if (settings_.mode == Mode::StaticMTD) {
    rec.decision = ObfuscationDecision::PortObfuscate;
  } else if (settings_.mode == Mode::Chaos) {
    rec.ids = ids_.verdict(p.src, now);
    rec.classification = classify_connection(tower_, *src_host, *dst_host, p.dst_port, rec.ids, now);
    rec.altitude = altitude(tower_, *src_host, *dst_host);
    if (rec.altitude < 0) rec.leapfrog = leapfrog_risk(tower_, *src_host, *dst_host);
    rec.decision = decide(*rec.classification, rec.leapfrog, true, rec.draw, tower_.config());

    if (rec.decision == ObfuscationDecision::PortObfuscate ||
        rec.decision == ObfuscationDecision::RedirectToDecoy) {
      const auto key = probe_key(p);
      if (auto stored = buffer_.lookup(key, now)) {
        rec.decision = *stored == ReplyVerdict::Decoy ? ObfuscationDecision::RedirectToDecoy
                                                      : ObfuscationDecision::PortObfuscate;
      } else if (rec.decision == ObfuscationDecision::RedirectToDecoy) {
        buffer_.store(key, ReplyVerdict::Decoy, now);
      }
    }
  } else {
    rec.decision = ObfuscationDecision::Forward;
  }

  if (rec.decision == ObfuscationDecision::RedirectToDecoy && decoy_pool_.empty())
    rec.decision = ObfuscationDecision::Drop;
  if (rec.decision != ObfuscationDecision::Forward) {
    auto it = net.connections().find({p.src, p.src_port});
    obfuscated_.insert({p.src, p.src_port, it == net.connections().end() ? now : it->second.opened});
  }

  switch (rec.decision) {
    case ObfuscationDecision::Forward:
      record(net, rec);
      forward(net, event, p);
      return;

    case ObfuscationDecision::Drop:
      record(net, rec);
      net.drop(p, FateKind::DroppedPolicy);
      return;

    case ObfuscationDecision::PortObfuscate: {
      const double fake_draw = next_draw();
      auto synth = synthesize_scan_reply(p, tower_.host(*dst_host), buffer_, fake_draw,
                                         settings_.obfuscation, now);
      rec.verdict = synth.verdict;
      record(net, rec);
      if (synth.verdict == ReplyVerdict::Real) {
        forward(net, event, p);
      } else if (synth.reply) {
        net.answer(p, std::move(*synth.reply), event.switch_id, event.in_port);
      } else {
        net.drop(p, FateKind::DroppedPolicy);
      }
      return;
    }

    case ObfuscationDecision::RedirectToDecoy: {
      rec.verdict = ReplyVerdict::Decoy;
      record(net, rec);
      Packet q = redirect_to_decoy(p, decoy_pool_, settings_.seed);
      // Replies from the decoy are rewritten to appear to come from the target.
      FlowEntry back;
      back.match.src = q.dst;
      back.match.dst = p.src;
      back.match.dst_port = p.src_port;
      back.priority = kRedirectPriority;
      back.actions = {RewriteSrc{p.dst}, Normal{}};
      back.idle_timeout = settings_.obfuscation.redirect_idle_timeout;
      back.cookie = "rev";
      net.install_flow(event.switch_id, std::move(back));
      forward(net, event, std::move(q));
      return;
    }
  }
}

}  // namespace chaos
