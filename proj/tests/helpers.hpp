#pragma once

#include <string>
#include <vector>

#include "chaos/tower.hpp"

namespace testing {

inline chaos::HostProfile make_host(const std::string& id, chaos::Address addr, const std::string& sw,
                                    std::vector<double> cvss,
                                    std::vector<chaos::ServiceRecord> services = {}) {
  chaos::HostProfile h;
  h.host_id = id;
  h.real_address = addr;
  h.attachment = sw;
  h.services = std::move(services);
  for (std::size_t i = 0; i < cvss.size(); ++i)
    h.vulnerabilities.push_back({id + "-v" + std::to_string(i), "test", cvss[i]});
  return h;
}

// Independent evaluation of the risk sum: each vulnerability contributes
// alpha * (largest SIV among the host's services) + (1 - alpha) * CVSS.
inline double risk_oracle(const chaos::HostProfile& h, const chaos::TowerConfig& c) {
  double siv = 0.0;
  for (const auto& s : h.services) {
    const double v = c.siv_table.at(s.service_name);
    if (v > siv) siv = v;
  }
  double total = 0.0;
  for (const auto& v : h.vulnerabilities) total += c.alpha * siv + (1.0 - c.alpha) * v.cvss_base;
  return total;
}

}  // namespace testing
