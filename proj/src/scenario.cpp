#include "chaos/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include "json.hpp"

#include "chaos/error.hpp"
#include "chaos/scanner.hpp"

namespace chaos {

using nlohmann::json;

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::PingSweep: return "ping_sweep";
    case ActionKind::PortScan: return "port_scan";
    case ActionKind::Fingerprint: return "fingerprint";
    case ActionKind::FullScan: return "full_scan";
    case ActionKind::Exploit: return "exploit";
    case ActionKind::AllPairs: return "all_pairs";
    case ActionKind::Flow: return "flow";
  }
  return "?";
}

std::optional<ActionKind> parse_action(std::string_view text) {
  for (auto k : {ActionKind::PingSweep, ActionKind::PortScan, ActionKind::Fingerprint, ActionKind::FullScan,
                 ActionKind::Exploit, ActionKind::AllPairs, ActionKind::Flow}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& message) {
  throw Error(ErrorCode::ValidationError, message, field);
}

void check_profile(const HostProfile& h, const Scenario& s, const std::set<SwitchId>& switches,
                   bool decoy) {
  const std::string where = decoy ? "decoys" : "hosts";
  if (h.host_id.empty()) invalid(where + ".id", "host id is empty");
  if (h.is_decoy != decoy) invalid(where + ".is_decoy", h.host_id + ": decoy flag mismatch");
  if (!switches.count(h.attachment))
    invalid(where + ".switch", fmt::format("{}: unknown switch '{}'", h.host_id, h.attachment));
  for (const auto& svc : h.services) {
    if (svc.port == 0) invalid("port", h.host_id + ": service port must lie in [1,65535]");
    if (svc.transport == Transport::ICMP) invalid("transport", h.host_id + ": services use tcp or udp");
    if (!decoy && !s.tower.siv_table.count(svc.service_name))
      invalid("siv_table", fmt::format("{}: service '{}' has no SIV", h.host_id, svc.service_name));
  }
  for (const auto& v : h.vulnerabilities) {
    if (!(v.cvss_base >= 0.0 && v.cvss_base <= 10.0))
      invalid("cvss", fmt::format("{}: CVSS of {} outside [0,10]", h.host_id, v.vuln_id));
  }
}

}  // namespace

void Scenario::validate() const {
  try {
    tower.validate();
    obfuscation.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ValidationError, e.what(), e.field());
  }
  if (ids.port_scan_k < 1) invalid("ids.port_scan_k", "must be >= 1");
  if (ids.sweep_k < 1) invalid("ids.sweep_k", "must be >= 1");
  if (ids.window < 1) invalid("ids.window", "must be >= 1");
  if (response_timeout < 1) invalid("response_timeout", "must be >= 1");
  if (!(controller_cost >= 0.0)) invalid("controller_cost", "must be >= 0");

  if (switches.empty()) invalid("topology.switches", "no switches");
  const std::set<SwitchId> sw(switches.begin(), switches.end());
  if (sw.size() != switches.size()) invalid("topology.switches", "duplicate switch id");
  for (const auto& l : links) {
    if (!sw.count(l.a) || !sw.count(l.b) || l.a == l.b)
      invalid("topology.links", fmt::format("bad link {}-{}", l.a, l.b));
  }

  if (hosts.empty()) invalid("hosts", "no hosts");
  std::set<HostId> ids_seen;
  std::set<Address> addrs;
  for (const auto* list : {&hosts, &decoys}) {
    for (const auto& h : *list) {
      check_profile(h, *this, sw, list == &decoys);
      if (!ids_seen.insert(h.host_id).second) invalid("hosts.id", "duplicate host id " + h.host_id);
      if (!addrs.insert(h.real_address).second)
        invalid("hosts.address", "duplicate address " + h.real_address.to_string());
    }
  }
  std::set<HostId> tower_hosts;
  for (const auto& h : hosts) tower_hosts.insert(h.host_id);

  for (const auto& w : whitelist) {
    if (!tower_hosts.count(w.src_host) || !tower_hosts.count(w.dst_host))
      invalid("whitelist", fmt::format("unknown host in rule {}->{}", w.src_host, w.dst_host));
    if (w.port == 0) invalid("whitelist.port", "port must lie in [1,65535]");
    if (w.active && w.active->begin >= w.active->end) invalid("whitelist.active", "empty tick window");
  }

  for (const auto& a : workload) {
    if (!tower_hosts.count(a.from)) invalid("workload.from", "unknown actor '" + a.from + "'");
    for (const auto& t : a.targets) {
      if (!tower_hosts.count(t)) invalid("workload.targets", "unknown target '" + t + "'");
    }
    if (a.repeat < 1) invalid("workload.repeat", "must be >= 1");
    if (a.kind == ActionKind::PortScan || a.kind == ActionKind::FullScan) {
      try {
        if (parse_port_list(a.ports).empty()) invalid("workload.ports", "empty port list");
      } catch (const Error& e) {
        if (e.code() == ErrorCode::ValidationError) throw;
        invalid("workload.ports", e.what());
      }
      if (a.transport == Transport::ICMP) invalid("workload.transport", "port scans use tcp or udp");
    }
    if (a.kind == ActionKind::Exploit && a.vuln_id.empty()) invalid("workload.vuln", "exploit needs a vuln id");
    if (a.kind == ActionKind::Flow && a.targets.size() != 1)
      invalid("workload.targets", "flow needs exactly one target");
    if ((a.kind == ActionKind::Exploit || a.kind == ActionKind::Flow || a.kind == ActionKind::AllPairs ||
         a.kind == ActionKind::Fingerprint) &&
        a.port == 0)
      invalid("workload.port", std::string(to_string(a.kind)) + " needs a port");
  }
}

// ---------------------------------------------------------------------------
// JSON mapping

namespace {

[[noreturn]] void parse_fail(const std::string& field, const std::string& message) {
  throw Error(ErrorCode::ParseError, message, field);
}

template <class T>
T read(const json& obj, const char* key, T fallback, const std::string& path) {
  if (!obj.is_object()) parse_fail(path, path + " must be an object");
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    parse_fail(path + "." + key, fmt::format("{}.{}: {}", path, key, e.what()));
  }
}

const json& read_array(const json& obj, const char* key, const std::string& path) {
  static const json empty = json::array();
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return empty;
  if (!it->is_array()) parse_fail(path + "." + key, fmt::format("{}.{} must be an array", path, key));
  return *it;
}

std::uint16_t read_port(const json& obj, const char* key, const std::string& path, bool required) {
  const auto v = read<std::int64_t>(obj, key, 0, path);
  if (v == 0 && !required) return 0;
  if (v < 1 || v > 65535) invalid("port", fmt::format("{}.{} = {} outside [1,65535]", path, key, v));
  return static_cast<std::uint16_t>(v);
}

Transport read_transport(const json& obj, const std::string& path, Transport fallback) {
  const auto text = read<std::string>(obj, "transport", std::string(to_string(fallback)), path);
  auto t = parse_transport(text);
  if (!t) parse_fail(path + ".transport", "unknown transport '" + text + "'");
  return *t;
}

HostProfile host_from_json(const json& j, const std::string& path, bool decoy) {
  HostProfile h;
  h.host_id = read<std::string>(j, "id", "", path);
  const auto addr = read<std::string>(j, "address", "", path);
  auto parsed = Address::parse(addr);
  if (!parsed) parse_fail(path + ".address", "bad address '" + addr + "'");
  h.real_address = *parsed;
  h.attachment = read<std::string>(j, "switch", "", path);
  h.is_decoy = decoy;
  const auto& svcs = read_array(j, "services", path);
  for (std::size_t i = 0; i < svcs.size(); ++i) {
    const auto p = fmt::format("{}.services[{}]", path, i);
    ServiceRecord s;
    s.service_name = read<std::string>(svcs[i], "name", "", p);
    s.port = read_port(svcs[i], "port", p, true);
    s.transport = read_transport(svcs[i], p, Transport::TCP);
    s.banner = read<std::string>(svcs[i], "banner", "", p);
    h.services.push_back(std::move(s));
  }
  const auto& vulns = read_array(j, "vulnerabilities", path);
  for (std::size_t i = 0; i < vulns.size(); ++i) {
    const auto p = fmt::format("{}.vulnerabilities[{}]", path, i);
    VulnerabilityRecord v;
    v.vuln_id = read<std::string>(vulns[i], "id", "", p);
    v.category = read<std::string>(vulns[i], "category", "", p);
    v.cvss_base = read<double>(vulns[i], "cvss", 0.0, p);
    h.vulnerabilities.push_back(std::move(v));
  }
  return h;
}

json host_to_json(const HostProfile& h) {
  json services = json::array();
  for (const auto& s : h.services) {
    services.push_back({{"name", s.service_name},
                        {"port", s.port},
                        {"transport", to_string(s.transport)},
                        {"banner", s.banner}});
  }
  json vulns = json::array();
  for (const auto& v : h.vulnerabilities) {
    vulns.push_back({{"id", v.vuln_id}, {"category", v.category}, {"cvss", v.cvss_base}});
  }
  return {{"id", h.host_id},
          {"address", h.real_address.to_string()},
          {"switch", h.attachment},
          {"services", services},
          {"vulnerabilities", vulns}};
}

Scenario scenario_from_json(const json& root) {
  if (!root.is_object()) parse_fail("", "scenario must be a JSON object");
  Scenario s;
  s.name = read<std::string>(root, "name", "", "scenario");
  s.seed = read<std::uint64_t>(root, "seed", 1, "scenario");
  const auto mode = read<std::string>(root, "mode", "chaos", "scenario");
  auto m = parse_mode(mode);
  if (!m) parse_fail("mode", "unknown mode '" + mode + "'");
  s.mode = *m;

  const json tower = root.value("tower", json::object());
  s.tower.alpha = read<double>(tower, "alpha", s.tower.alpha, "tower");
  s.tower.threshold = read<double>(tower, "threshold", s.tower.threshold, "tower");
  s.tower.random_index = read<double>(tower, "random_index", s.tower.random_index, "tower");
  s.tower.layer_count = read<int>(tower, "layer_count", s.tower.layer_count, "tower");
  s.tower.strict_intra_layer = read<bool>(tower, "strict_intra_layer", false, "tower");
  const auto binning = read<std::string>(tower, "binning", "equal_width", "tower");
  if (binning == "equal_width") {
    s.tower.binning = Binning::EqualWidth;
  } else if (binning == "quantile") {
    s.tower.binning = Binning::Quantile;
  } else {
    parse_fail("tower.binning", "unknown binning '" + binning + "'");
  }
  s.tower.siv_table = read<std::map<std::string, double>>(tower, "siv_table", {}, "tower");

  const json obf = root.value("obfuscation", json::object());
  s.obfuscation.fake_rate = read<double>(obf, "fake_rate", s.obfuscation.fake_rate, "obfuscation");
  s.obfuscation.ticks_per_epoch = read<Tick>(obf, "ticks_per_epoch", s.obfuscation.ticks_per_epoch, "obfuscation");
  s.obfuscation.buffer_window = read<Tick>(obf, "buffer_window", s.obfuscation.buffer_window, "obfuscation");
  s.obfuscation.synthetic_ttl = read<int>(obf, "synthetic_ttl", s.obfuscation.synthetic_ttl, "obfuscation");
  s.obfuscation.redirect_idle_timeout =
      read<Tick>(obf, "redirect_idle_timeout", s.obfuscation.redirect_idle_timeout, "obfuscation");

  const json ids = root.value("ids", json::object());
  s.ids.port_scan_k = read<int>(ids, "port_scan_k", s.ids.port_scan_k, "ids");
  s.ids.sweep_k = read<int>(ids, "sweep_k", s.ids.sweep_k, "ids");
  s.ids.window = read<Tick>(ids, "window", s.ids.window, "ids");

  const json scanner = root.value("scanner", json::object());
  s.response_timeout = read<Tick>(scanner, "response_timeout", s.response_timeout, "scanner");
  s.controller_cost = read<double>(scanner, "controller_cost", s.controller_cost, "scanner");

  const json topo = root.value("topology", json::object());
  s.switches = read<std::vector<std::string>>(topo, "switches", {}, "topology");
  const auto& links = read_array(topo, "links", "topology");
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (!links[i].is_array() || links[i].size() != 2 || !links[i][0].is_string() || !links[i][1].is_string())
      parse_fail(fmt::format("topology.links[{}]", i), "link must be a pair of switch ids");
    s.links.push_back({links[i][0].get<std::string>(), links[i][1].get<std::string>()});
  }

  const auto& hosts = read_array(root, "hosts", "scenario");
  for (std::size_t i = 0; i < hosts.size(); ++i)
    s.hosts.push_back(host_from_json(hosts[i], fmt::format("hosts[{}]", i), false));
  const auto& decoys = read_array(root, "decoys", "scenario");
  for (std::size_t i = 0; i < decoys.size(); ++i)
    s.decoys.push_back(host_from_json(decoys[i], fmt::format("decoys[{}]", i), true));

  const auto& wl = read_array(root, "whitelist", "scenario");
  for (std::size_t i = 0; i < wl.size(); ++i) {
    const auto p = fmt::format("whitelist[{}]", i);
    WhitelistRule r;
    r.src_host = read<std::string>(wl[i], "src", "", p);
    r.dst_host = read<std::string>(wl[i], "dst", "", p);
    r.port = read_port(wl[i], "port", p, true);
    if (auto it = wl[i].find("active"); it != wl[i].end() && !it->is_null()) {
      const auto w = read<std::vector<Tick>>(wl[i], "active", {}, p);
      if (w.size() != 2) parse_fail(p + ".active", "active must be [begin, end]");
      r.active = TickWindow{w[0], w[1]};
    }
    s.whitelist.push_back(std::move(r));
  }

  const auto& work = read_array(root, "workload", "scenario");
  for (std::size_t i = 0; i < work.size(); ++i) {
    const auto p = fmt::format("workload[{}]", i);
    WorkloadAction a;
    const auto action = read<std::string>(work[i], "action", "", p);
    auto k = parse_action(action);
    if (!k) parse_fail(p + ".action", "unknown action '" + action + "'");
    a.kind = *k;
    a.at = read<Tick>(work[i], "at", 0, p);
    a.from = read<std::string>(work[i], "from", "", p);
    a.targets = read<std::vector<std::string>>(work[i], "targets", {}, p);
    a.ports = read<std::string>(work[i], "ports", a.ports, p);
    a.transport = read_transport(work[i], p, Transport::TCP);
    a.port = read_port(work[i], "port", p, false);
    a.vuln_id = read<std::string>(work[i], "vuln", "", p);
    a.payload = read<std::string>(work[i], "payload", "", p);
    a.repeat = read<int>(work[i], "repeat", 1, p);
    s.workload.push_back(std::move(a));
  }
  return s;
}

}  // namespace

Scenario parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw Error(ErrorCode::ParseError, fmt::format("line {}: {}", line, e.what()), fmt::format("line {}", line));
  }
  Scenario s = scenario_from_json(root);
  s.validate();
  return s;
}

Scenario load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string(), path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize(const Scenario& s) {
  json root;
  root["name"] = s.name;
  root["seed"] = s.seed;
  root["mode"] = to_string(s.mode);
  root["tower"] = {{"alpha", s.tower.alpha},
                   {"threshold", s.tower.threshold},
                   {"random_index", s.tower.random_index},
                   {"layer_count", s.tower.layer_count},
                   {"binning", to_string(s.tower.binning)},
                   {"strict_intra_layer", s.tower.strict_intra_layer},
                   {"siv_table", s.tower.siv_table}};
  root["obfuscation"] = {{"fake_rate", s.obfuscation.fake_rate},
                         {"ticks_per_epoch", s.obfuscation.ticks_per_epoch},
                         {"buffer_window", s.obfuscation.buffer_window},
                         {"synthetic_ttl", s.obfuscation.synthetic_ttl},
                         {"redirect_idle_timeout", s.obfuscation.redirect_idle_timeout}};
  root["ids"] = {{"port_scan_k", s.ids.port_scan_k}, {"sweep_k", s.ids.sweep_k}, {"window", s.ids.window}};
  root["scanner"] = {{"response_timeout", s.response_timeout}, {"controller_cost", s.controller_cost}};
  json links = json::array();
  for (const auto& l : s.links) links.push_back({l.a, l.b});
  root["topology"] = {{"switches", s.switches}, {"links", links}};
  root["hosts"] = json::array();
  for (const auto& h : s.hosts) root["hosts"].push_back(host_to_json(h));
  root["decoys"] = json::array();
  for (const auto& h : s.decoys) root["decoys"].push_back(host_to_json(h));
  root["whitelist"] = json::array();
  for (const auto& w : s.whitelist) {
    json r = {{"src", w.src_host}, {"dst", w.dst_host}, {"port", w.port}};
    if (w.active) r["active"] = {w.active->begin, w.active->end};
    root["whitelist"].push_back(std::move(r));
  }
  root["workload"] = json::array();
  for (const auto& a : s.workload) {
    json j = {{"action", to_string(a.kind)},
              {"at", a.at},
              {"from", a.from},
              {"targets", a.targets},
              {"ports", a.ports},
              {"transport", to_string(a.transport)},
              {"repeat", a.repeat}};
    if (a.port) j["port"] = a.port;
    if (!a.vuln_id.empty()) j["vuln"] = a.vuln_id;
    if (!a.payload.empty()) j["payload"] = a.payload;
    root["workload"].push_back(std::move(j));
  }
  return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Reference scenarios

namespace {

ServiceRecord svc(std::string name, std::uint16_t port, std::string banner,
                  Transport t = Transport::TCP) {
  return {std::move(name), port, t, std::move(banner)};
}

VulnerabilityRecord vuln(std::string id, std::string category, double cvss) {
  return {std::move(id), std::move(category), cvss};
}

HostProfile host(HostId id, Address a, SwitchId sw, std::vector<ServiceRecord> services,
                 std::vector<VulnerabilityRecord> vulns, bool decoy = false) {
  return {std::move(id), a, std::move(sw), std::move(services), std::move(vulns), decoy};
}

// Two database servers on top, web servers below them, workstations, then
// BYOD devices. Parameters are illustrative.
Scenario fig2() {
  Scenario s;
  s.name = "fig2";
  s.tower.alpha = 0.5;
  s.tower.threshold = 0.5;
  s.tower.random_index = 0.5;
  s.tower.layer_count = 4;
  s.tower.siv_table = {{"mysql", 10}, {"ssh", 6}, {"http", 7}, {"smb", 8}, {"rdp", 7}};
  s.switches = {"s1", "s2", "s3", "s4", "s5", "s6"};
  for (int i = 2; i <= 6; ++i) s.links.push_back({"s1", fmt::format("s{}", i)});

  const auto db_services = std::vector{svc("mysql", 3306, "5.5.62-MySQL Community Server"),
                                       svc("ssh", 22, "OpenSSH_5.3")};
  const auto db_vulns = std::vector{vuln("CVE-2012-2122", "auth-bypass", 7.5),
                                    vuln("CVE-2016-6662", "rce", 10.0),
                                    vuln("CVE-2012-5611", "overflow", 9.0),
                                    vuln("CVE-2016-6210", "info-leak", 5.0)};
  s.hosts.push_back(host("db1", Address(10, 0, 1, 1), "s2", db_services, db_vulns));
  s.hosts.push_back(host("db2", Address(10, 0, 1, 2), "s2", db_services, db_vulns));

  const auto web_services = std::vector{svc("http", 80, "Apache/2.2.15 (CentOS)"),
                                        svc("ssh", 22, "OpenSSH_5.3")};
  const auto web_vulns = std::vector{vuln("CVE-2017-9798", "info-leak", 7.5),
                                     vuln("CVE-2011-3192", "dos", 7.8),
                                     vuln("CVE-2016-6210", "info-leak", 5.0)};
  s.hosts.push_back(host("web1", Address(10, 0, 2, 1), "s3", web_services, web_vulns));
  s.hosts.push_back(host("web2", Address(10, 0, 2, 2), "s3", web_services, web_vulns));

  const auto ws_services = std::vector{svc("smb", 445, "Windows 7 Professional 7601 SP1 microsoft-ds"),
                                       svc("rdp", 3389, "Microsoft Terminal Services")};
  const auto ws_vulns = std::vector{vuln("MS08-067", "rce", 10.0), vuln("CVE-2019-0708", "rce", 9.8)};
  for (int i = 1; i <= 3; ++i)
    s.hosts.push_back(host(fmt::format("ws{}", i), Address(10, 0, 3, i), "s4", ws_services, ws_vulns));

  s.hosts.push_back(host("byod1", Address(10, 0, 4, 1), "s5", {}, {vuln("CVE-2019-1367", "rce", 7.5)}));
  s.hosts.push_back(host("byod2", Address(10, 0, 4, 2), "s5", {svc("ssh", 22, "dropbear_2012.55")},
                         {vuln("CVE-2016-7406", "format-string", 9.8)}));

  const auto lures = std::vector{svc("ftp", 21, "vsFTPd 2.3.4"), svc("telnet", 23, "Linux telnetd"),
                                 svc("http-alt", 8080, "Apache Tomcat/Coyote JSP engine 1.1")};
  s.decoys.push_back(host("decoy1", Address(10, 0, 9, 1), "s6", lures, {}, true));
  s.decoys.push_back(host("decoy2", Address(10, 0, 9, 2), "s6", lures, {}, true));

  for (const auto* w : {"web1", "web2"})
    for (const auto* d : {"db1", "db2"}) s.whitelist.push_back({w, d, 3306, std::nullopt});

  WorkloadAction scan;
  scan.kind = ActionKind::FullScan;
  scan.from = "byod1";
  scan.ports = "1-1024,3306,3389,8080";
  scan.repeat = 10;
  s.workload.push_back(scan);
  return s;
}

Scenario attack_ladder() {
  Scenario s;
  s.name = "attack-ladder";
  s.tower.layer_count = 5;
  s.tower.siv_table = {{"smb", 2}, {"http", 4}, {"mssql", 6}, {"ldap", 8}, {"kerberos", 10}};
  s.switches = {"core"};
  const std::vector<ServiceRecord> roles = {
      svc("smb", 139, "Samba smbd 3.0.20"),
      svc("http", 80, "Microsoft-IIS/6.0"),
      svc("mssql", 1433, "Microsoft SQL Server 2005"),
      svc("ldap", 389, "Microsoft Windows Active Directory LDAP"),
      svc("kerberos", 88, "Microsoft Windows Kerberos"),
  };
  for (int i = 0; i < 5; ++i) {
    const auto sw = fmt::format("s{}", i);
    s.switches.push_back(sw);
    s.links.push_back({"core", sw});
    std::vector<ServiceRecord> services{svc("smb", 445, "Windows Server 2003 microsoft-ds")};
    if (i > 0) services.push_back(roles[static_cast<std::size_t>(i)]);
    s.hosts.push_back(host(fmt::format("l{}", i), Address(10, 2, static_cast<std::uint8_t>(i), 1), sw,
                           std::move(services), {vuln("MS08-067", "rce", 10.0)}));
  }
  s.decoys.push_back(host("decoy1", Address(10, 2, 9, 1), "core",
                          {svc("ftp", 21, "vsFTPd 2.3.4"), svc("http-alt", 8080, "Jetty 6.1.25")}, {}, true));

  WorkloadAction scan;
  scan.kind = ActionKind::FullScan;
  scan.from = "l0";
  s.workload.push_back(scan);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      if (i == j) continue;
      WorkloadAction e;
      e.kind = ActionKind::Exploit;
      e.from = fmt::format("l{}", i);
      e.targets = {fmt::format("l{}", j)};
      e.port = 445;
      e.vuln_id = "MS08-067";
      s.workload.push_back(e);
    }
  }
  return s;
}

}  // namespace

Scenario bintree_scenario(int layers) {
  if (layers < 1 || layers > 8) throw Error(ErrorCode::InvalidLayerCount, "bintree scenarios use 1..8 layers");
  Scenario s;
  s.name = fmt::format("bintree-{}", layers);
  s.tower.layer_count = layers;
  s.tower.siv_table = {{"http", 5}};
  const int n = (1 << layers) - 1;
  for (int i = 1; i <= n; ++i) {
    const auto sw = fmt::format("sw{}", i);
    s.switches.push_back(sw);
    if (i > 1) s.links.push_back({fmt::format("sw{}", i / 2), sw});
    int depth = 0;
    while ((2 << depth) <= i) ++depth;
    std::vector<VulnerabilityRecord> vulns;
    for (int k = 0; k < layers - depth; ++k) vulns.push_back(vuln(fmt::format("VULN-{}-{}", i, k), "generic", 5.0));
    s.hosts.push_back(host(fmt::format("n{}", i), Address(10, 1, static_cast<std::uint8_t>(i >> 8),
                                                          static_cast<std::uint8_t>(i & 0xff)),
                           sw, {svc("http", 80, "nginx/1.14.0")}, std::move(vulns)));
  }
  s.decoys.push_back(host("decoy1", Address(10, 1, 200, 1), "sw1", {svc("telnet", 23, "Linux telnetd")}, {}, true));

  WorkloadAction pairs;
  pairs.kind = ActionKind::AllPairs;
  pairs.from = "n1";
  pairs.port = 80;
  s.workload.push_back(pairs);
  return s;
}

std::vector<std::string> reference_scenario_names() {
  std::vector<std::string> names{"fig2"};
  for (int l = 2; l <= 6; ++l) names.push_back(fmt::format("bintree-{}", l));
  names.push_back("attack-ladder");
  return names;
}

Scenario reference_scenario(std::string_view name) {
  if (name == "fig2") return fig2();
  if (name == "attack-ladder") return attack_ladder();
  if (name.starts_with("bintree-") && name.size() == 9) {
    const int l = name[8] - '0';
    if (l >= 2 && l <= 6) return bintree_scenario(l);
  }
  throw Error(ErrorCode::ValidationError, fmt::format("no reference scenario '{}'", name), "config");
}

ObfuscationLoad predicted_obfuscation_load(int layers) {
  if (layers < 1 || layers > 32)
    throw Error(ErrorCode::InvalidLayerCount, fmt::format("layer count {} outside [1,32]", layers), "layers");
  ObfuscationLoad load;
  const std::uint64_t n = (std::uint64_t{1} << layers) - 1;
  load.mtd = n * (n - 1);
  for (int i = 1; i < layers; ++i) {
    const std::uint64_t w = std::uint64_t{1} << i;
    load.chaos += w * (w - 1);
  }
  return load;
}

}  // namespace chaos
