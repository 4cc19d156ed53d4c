#include "chaos/address.hpp"

#include <charconv>

#include "chaos/error.hpp"

namespace chaos {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownService: return "UnknownService";
    case ErrorCode::InvalidScore: return "InvalidScore";
    case ErrorCode::EmptyNetwork: return "EmptyNetwork";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::DuplicateHost: return "DuplicateHost";
    case ErrorCode::UnknownHost: return "UnknownHost";
    case ErrorCode::NotAnUpwardConnection: return "NotAnUpwardConnection";
    case ErrorCode::PoolTooSmall: return "PoolTooSmall";
    case ErrorCode::PoolsOverlap: return "PoolsOverlap";
    case ErrorCode::UnmappedAddress: return "UnmappedAddress";
    case ErrorCode::UnsupportedProbeType: return "UnsupportedProbeType";
    case ErrorCode::NoDecoysConfigured: return "NoDecoysConfigured";
    case ErrorCode::UnknownSwitch: return "UnknownSwitch";
    case ErrorCode::UnknownPort: return "UnknownPort";
    case ErrorCode::ZeroBaseline: return "ZeroBaseline";
    case ErrorCode::UnknownVulnId: return "UnknownVulnId";
    case ErrorCode::InvalidLayerCount: return "InvalidLayerCount";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

std::string Address::to_string() const {
  return std::to_string((value >> 24) & 0xff) + '.' + std::to_string((value >> 16) & 0xff) +
         '.' + std::to_string((value >> 8) & 0xff) + '.' + std::to_string(value & 0xff);
}

std::optional<Address> Address::parse(std::string_view text) {
  std::uint32_t out = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    unsigned v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc{} || v > 255 || next == p) return std::nullopt;
    out = (out << 8) | v;
    p = next;
    if (octet < 3) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
  }
  if (p != end) return std::nullopt;
  return Address{out};
}

std::string_view to_string(Transport t) {
  switch (t) {
    case Transport::TCP: return "tcp";
    case Transport::UDP: return "udp";
    case Transport::ICMP: return "icmp";
  }
  return "?";
}

std::optional<Transport> parse_transport(std::string_view text) {
  if (text == "tcp" || text == "TCP") return Transport::TCP;
  if (text == "udp" || text == "UDP") return Transport::UDP;
  if (text == "icmp" || text == "ICMP") return Transport::ICMP;
  return std::nullopt;
}

std::uint64_t hash_string(std::string_view s) {
  // FNV-1a, then finalized.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

}  // namespace chaos
