#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace chaos {

using Tick = std::uint64_t;

/// IPv4-style address in the simulated address space.
struct Address {
  std::uint32_t value = 0;

  constexpr Address() = default;
  constexpr explicit Address(std::uint32_t v) : value(v) {}
  constexpr Address(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
      : value((std::uint32_t(a) << 24) | (std::uint32_t(b) << 16) |
              (std::uint32_t(c) << 8) | std::uint32_t(d)) {}

  std::string to_string() const;
  static std::optional<Address> parse(std::string_view text);

  friend constexpr auto operator<=>(Address, Address) = default;
};

enum class Transport : std::uint8_t { TCP, UDP, ICMP };

std::string_view to_string(Transport t);
std::optional<Transport> parse_transport(std::string_view text);

/// splitmix64 finalizer; used wherever a stable, platform-independent hash
/// or seed derivation is needed.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) {
  return mix64(seed ^ mix64(v));
}

std::uint64_t hash_string(std::string_view s);

}  // namespace chaos

template <>
struct std::hash<chaos::Address> {
  std::size_t operator()(chaos::Address a) const noexcept {
    return static_cast<std::size_t>(chaos::mix64(a.value));
  }
};
