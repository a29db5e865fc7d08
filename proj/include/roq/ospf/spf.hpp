#pragma once

#include <cstdint>
#include <map>
#include <optional>

#include "roq/ospf/lsdb.hpp"
#include "roq/prefix.hpp"

namespace roq::ospf {

struct RouteEntry {
  RouterId next_hop = 0;
  std::uint32_t cost = 0;
  auto operator<=>(const RouteEntry&) const = default;
};

struct RouteTable {
  std::map<RouterId, RouteEntry> routers;
  std::map<Prefix, RouteEntry> prefixes;
  auto operator<=>(const RouteTable&) const = default;
};

/// Shortest paths over the LSDB rooted at `root`. A link counts only when
/// both endpoints advertise it (bidirectional confirmation); the traversed
/// direction's advertised cost applies. Equal-cost ties resolve to the
/// lowest next-hop router id, which makes tables comparable across runs.
/// External prefixes attach at their advertising router.
inline RouteTable spf_compute(const Lsdb& db, RouterId root) {
  RouteTable table;
  if (!db.find({LsaType::RouterLsa, root, root})) return table;
  table.routers[root] = {root, 0};

  // Usable directed edges from the router LSAs.
  struct Edge { RouterId from, to; std::uint32_t cost; };
  std::vector<Edge> edges;
  auto links_of = [&](RouterId r) -> const std::vector<RouterLink>* {
    const Lsa* l = db.find({LsaType::RouterLsa, r, r});
    if (!l) return nullptr;
    return &std::get<RouterLsaBody>(l->body).links;
  };
  for (const auto& [key, lsa] : db.contents()) {
    if (key.type != LsaType::RouterLsa) continue;
    const auto& body = std::get<RouterLsaBody>(lsa.body);
    for (const RouterLink& ln : body.links) {
      const std::vector<RouterLink>* back = links_of(ln.neighbor);
      if (!back) continue;
      bool confirmed = false;
      for (const RouterLink& b : *back)
        if (b.neighbor == key.adv_router) confirmed = true;
      if (confirmed) edges.push_back({key.adv_router, ln.neighbor, ln.cost});
    }
  }

  // Lexicographic (cost, next_hop) relaxation to a fixed point. Small
  // graphs only; clarity over asymptotics.
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Edge& e : edges) {
      auto uit = table.routers.find(e.from);
      if (uit == table.routers.end()) continue;
      RouteEntry cand;
      cand.cost = uit->second.cost + e.cost;
      cand.next_hop = (e.from == root) ? e.to : uit->second.next_hop;
      auto vit = table.routers.find(e.to);
      if (vit == table.routers.end() || cand.cost < vit->second.cost ||
          (cand.cost == vit->second.cost && cand.next_hop < vit->second.next_hop)) {
        table.routers[e.to] = cand;
        changed = true;
      }
    }
  }

  // Prefix routes via the advertising router; cheapest wins, then lowest
  // next hop, then lowest advertising router.
  std::map<Prefix, std::tuple<std::uint32_t, RouterId, RouterId>> best;
  for (const auto& [key, lsa] : db.contents()) {
    if (key.type != LsaType::ExternalPrefixLsa) continue;
    auto rit = table.routers.find(key.adv_router);
    if (rit == table.routers.end()) continue;
    const auto& body = std::get<ExternalLsaBody>(lsa.body);
    std::tuple<std::uint32_t, RouterId, RouterId> cand{rit->second.cost + body.cost,
                                                       rit->second.next_hop, key.adv_router};
    auto bit = best.find(body.prefix);
    if (bit == best.end() || cand < bit->second) best[body.prefix] = cand;
  }
  for (const auto& [p, t] : best)
    table.prefixes[p] = {std::get<1>(t), std::get<0>(t)};
  return table;
}

}  // namespace roq::ospf
