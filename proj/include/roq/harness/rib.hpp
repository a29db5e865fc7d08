#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "roq/bgp/router.hpp"
#include "roq/harness/config.hpp"
#include "roq/prefix.hpp"
#include "roq/rng.hpp"

namespace roq::harness {

struct IngestResult {
  std::vector<bgp::RibRoute> routes;
  std::size_t v4_count = 0;
  std::size_t v6_count = 0;
  std::vector<ConfigError> errors;
  bool ok() const { return errors.empty(); }
};

/// Text RIB format: one route per line, `<prefix> <as1> <as2> ...`,
/// `#` comments and blank lines ignored. Prefixes are canonicalized;
/// duplicates keep the first occurrence.
inline IngestResult ingest_rib_text(const std::string& text) {
  IngestResult out;
  std::set<Prefix> seen;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::vector<std::string> tok = detail::tokenize(line);
    if (tok.empty()) continue;
    auto p = Prefix::parse(tok[0]);
    if (!p) {
      out.errors.push_back({lineno, "BadPrefix: " + tok[0]});
      continue;
    }
    bgp::RibRoute r;
    r.prefix = *p;
    bool bad = false;
    for (std::size_t i = 1; i < tok.size(); ++i) {
      std::uint64_t as = 0;
      if (!detail::parse_u64(tok[i], as) || as == 0 || as > 0xFFFFFFFFull) {
        out.errors.push_back({lineno, "BadAsNumber: " + tok[i]});
        bad = true;
        break;
      }
      r.as_path.push_back(static_cast<std::uint32_t>(as));
    }
    if (bad) continue;
    if (!seen.insert(r.prefix).second) continue;  // first occurrence wins
    if (r.prefix.family == Prefix::Family::V4) ++out.v4_count;
    else ++out.v6_count;
    out.routes.push_back(std::move(r));
  }
  return out;
}

inline IngestResult ingest_rib(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    IngestResult r;
    r.errors.push_back({0, "cannot open " + path});
    return r;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ingest_rib_text(ss.str());
}

/// Desk-scale stand-in for a route-collector snapshot: `count` unique
/// synthetic prefixes, 85% IPv4 / 15% IPv6 (the snapshot's 970k:171k
/// ratio), AS-path lengths 1..5 from the seeded generator.
inline std::vector<bgp::RibRoute> generate_rib(std::size_t count, std::uint64_t seed) {
  SplitMix64 g(seed);
  std::set<Prefix> seen;
  std::vector<bgp::RibRoute> out;
  out.reserve(count);
  while (out.size() < count) {
    bool v4 = g.range(0, 99) < 85;
    Prefix p;
    if (v4) {
      std::array<std::uint8_t, 16> addr{};
      for (int i = 0; i < 4; ++i) addr[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(g.next_u64());
      p = Prefix::make(Prefix::Family::V4, addr, static_cast<std::uint8_t>(g.range(16, 24)));
    } else {
      std::array<std::uint8_t, 16> addr{};
      addr[0] = 0x20;
      addr[1] = 0x01;
      for (int i = 2; i < 8; ++i) addr[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(g.next_u64());
      p = Prefix::make(Prefix::Family::V6, addr, static_cast<std::uint8_t>(g.range(32, 48)));
    }
    if (!seen.insert(p).second) continue;
    bgp::RibRoute r;
    r.prefix = p;
    std::size_t hops = g.range(1, 5);
    while (r.as_path.size() < hops) {
      std::uint32_t as = static_cast<std::uint32_t>(g.range(65001, 65499));
      bool dup = false;
      for (std::uint32_t a : r.as_path) dup = dup || a == as;
      if (!dup) r.as_path.push_back(as);
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string format_rib(const std::vector<bgp::RibRoute>& routes) {
  std::ostringstream os;
  os << "# prefix as-path...\n";
  for (const auto& r : routes) {
    os << r.prefix.to_string();
    for (std::uint32_t as : r.as_path) os << ' ' << as;
    os << '\n';
  }
  return os.str();
}

}  // namespace roq::harness
