#pragma once

// Seeded random generators for property tests. Kept separate from the
// library so expected values never depend on implementation internals.

#include <vector>

#include "roq/bgp/message.hpp"
#include "roq/prefix.hpp"
#include "roq/rng.hpp"

namespace roq::testgen {

inline Prefix random_prefix(SplitMix64& g) {
  bool v6 = g.next_double() < 0.3;
  std::array<std::uint8_t, 16> addr{};
  if (v6) {
    std::uint8_t len = static_cast<std::uint8_t>(g.range(0, 64));
    for (int i = 0; i < 8; ++i) addr[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(g.next_u64());
    return Prefix::make(Prefix::Family::V6, addr, len);
  }
  std::uint8_t len = static_cast<std::uint8_t>(g.range(0, 32));
  for (int i = 0; i < 4; ++i) addr[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(g.next_u64());
  return Prefix::make(Prefix::Family::V4, addr, len);
}

inline bgp::PathAttrs random_attrs(SplitMix64& g) {
  bgp::PathAttrs a;
  a.origin = static_cast<bgp::Origin>(g.range(0, 2));
  std::size_t n = g.range(0, 8);
  for (std::size_t i = 0; i < n; ++i)
    a.as_path.push_back(static_cast<std::uint32_t>(g.range(1, 4200000000ull)));
  a.next_hop = static_cast<std::uint32_t>(g.next_u64());
  if (g.next_double() < 0.4) a.med = static_cast<std::uint32_t>(g.next_u64());
  return a;
}

/// Random well-formed BgpMessage: sizes stay under the 4096-byte cap.
inline bgp::BgpMessage random_bgp_message(SplitMix64& g) {
  switch (g.range(0, 3)) {
    case 0: {
      bgp::OpenMsg m;
      m.my_as = static_cast<std::uint32_t>(g.next_u64());
      m.hold_time_s = static_cast<std::uint16_t>(g.range(0, 65535));
      m.bgp_id = static_cast<std::uint32_t>(g.next_u64());
      return m;
    }
    case 1: {
      bgp::UpdateMsg m;
      std::size_t wd = g.range(0, 40);
      for (std::size_t i = 0; i < wd; ++i) m.withdrawn.push_back(random_prefix(g));
      std::size_t nl = g.range(0, 40);
      if (nl > 0 || g.next_double() < 0.5) m.attrs = random_attrs(g);
      for (std::size_t i = 0; i < nl; ++i) m.nlri.push_back(random_prefix(g));
      return m;
    }
    case 2: {
      bgp::NotificationMsg m;
      m.code = static_cast<std::uint8_t>(g.range(1, 6));
      m.subcode = static_cast<std::uint8_t>(g.range(0, 10));
      std::size_t n = g.range(0, 64);
      for (std::size_t i = 0; i < n; ++i)
        m.data.push_back(static_cast<std::uint8_t>(g.next_u64()));
      return m;
    }
    default:
      return bgp::KeepaliveMsg{};
  }
}

}  // namespace roq::testgen
