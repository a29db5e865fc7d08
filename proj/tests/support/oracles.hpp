#pragma once

// Independent oracles for derived expectations. These reimplement the
// propagation and shortest-path semantics directly from their definitions,
// in test code, so library changes cannot silently re-derive the expected
// values.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include "roq/prefix.hpp"

namespace roq::oracle {

// --- BGP propagation fixed point -------------------------------------------

struct BgpNode {
  std::uint32_t as = 0;
  std::uint32_t bgp_id = 0;
};

struct BgpRouteState {
  std::vector<std::uint32_t> as_path;
};

struct UpdateSeen {
  std::uint32_t at;         // receiving router (by index)
  std::uint32_t from;       // sending router (by index)
  bool announce = false;    // otherwise withdraw
};

/// Worklist evaluation of the export rules (split-horizon withdraw, skip on
/// peer-AS in path, announce with local AS prepended) plus receiver-side
/// loop rejection, over an arbitrary session graph. Returns final
/// Adj-RIB-In contents and which update messages each router received.
struct BgpPropagation {
  // adj_in[router][peer] -> path (present means announced and accepted)
  std::map<std::uint32_t, std::map<std::uint32_t, std::vector<std::uint32_t>>> adj_in;
  std::set<std::tuple<std::uint32_t, std::uint32_t, bool>> received;  // (at, from, announce)
};

inline BgpPropagation propagate_one_prefix(const std::vector<BgpNode>& nodes,
                                           const std::vector<std::pair<std::uint32_t, std::uint32_t>>& sessions,
                                           std::uint32_t origin,
                                           std::vector<std::uint32_t> origin_path) {
  BgpPropagation out;
  std::map<std::uint32_t, std::vector<std::uint32_t>> peers_of;
  for (auto [a, b] : sessions) {
    peers_of[a].push_back(b);
    peers_of[b].push_back(a);
  }
  for (auto& [r, ps] : peers_of) std::sort(ps.begin(), ps.end());

  // adj_in keyed by (router, learned-from); kLocalPeer modeled as SIZE_MAX.
  constexpr std::uint32_t kLocal = 0xFFFFFFFF;
  std::map<std::uint32_t, std::map<std::uint32_t, std::vector<std::uint32_t>>> rib;
  rib[origin][kLocal] = origin_path;

  auto best_of = [&](std::uint32_t r)
      -> std::optional<std::pair<std::uint32_t, std::vector<std::uint32_t>>> {
    std::optional<std::pair<std::uint32_t, std::vector<std::uint32_t>>> best;
    auto it = rib.find(r);
    if (it == rib.end()) return best;
    for (const auto& [peer, path] : it->second) {
      // kLocal (max id) must win ties like bgp::kLocalPeer (id 0) does, so
      // order by (len, is-not-local, peer id).
      auto key = std::make_tuple(path.size(), peer != kLocal, peer);
      if (!best) { best = {peer, path}; continue; }
      auto bkey = std::make_tuple(best->second.size(), best->first != kLocal, best->first);
      if (key < bkey) best = {peer, path};
    }
    return best;
  };

  std::map<std::uint32_t, std::optional<std::pair<std::uint32_t, std::vector<std::uint32_t>>>>
      last_best;
  std::vector<std::uint32_t> work = {origin};
  while (!work.empty()) {
    std::uint32_t r = work.front();
    work.erase(work.begin());
    auto best = best_of(r);
    if (best == last_best[r]) continue;
    last_best[r] = best;
    for (std::uint32_t peer : peers_of[r]) {
      std::uint32_t peer_as = nodes[peer].as;
      bool changed = false;
      if (!best || best->first == peer) {
        // withdraw (split horizon or no route)
        out.received.insert({peer, r, false});
        changed = rib[peer].erase(r) > 0;
      } else if (std::find(best->second.begin(), best->second.end(), peer_as) !=
                 best->second.end()) {
        continue;  // skip: would loop
      } else {
        std::vector<std::uint32_t> exported = best->second;
        exported.insert(exported.begin(), nodes[r].as);
        out.received.insert({peer, r, true});
        if (std::find(exported.begin(), exported.end(), nodes[peer].as) == exported.end()) {
          rib[peer][r] = exported;
          changed = true;
        } else {
          changed = rib[peer].erase(r) > 0;  // loop-rejected, not stored
        }
      }
      if (changed) work.push_back(peer);
    }
  }

  for (const auto& [r, table] : rib)
    for (const auto& [peer, path] : table)
      if (peer != kLocal) out.adj_in[r][peer] = path;
  return out;
}

// --- brute-force shortest paths ---------------------------------------------

struct GraphEdge {
  std::uint32_t u, v;
  std::uint32_t w_uv, w_vu;  // directional costs
};

struct OracleRoute {
  std::uint32_t cost = 0;
  std::uint32_t next_hop = 0;
};

/// Floyd-Warshall distances plus minimal-first-hop selection among all
/// minimum-cost paths. Nodes are 0..n-1; unreachable nodes are absent.
inline std::map<std::uint32_t, OracleRoute> brute_force_spf(
    std::uint32_t n, const std::vector<GraphEdge>& edges, std::uint32_t root) {
  constexpr std::uint64_t kInf = ~0ull >> 2;
  std::vector<std::vector<std::uint64_t>> dist(n, std::vector<std::uint64_t>(n, kInf));
  for (std::uint32_t i = 0; i < n; ++i) dist[i][i] = 0;
  for (const GraphEdge& e : edges) {
    dist[e.u][e.v] = std::min<std::uint64_t>(dist[e.u][e.v], e.w_uv);
    dist[e.v][e.u] = std::min<std::uint64_t>(dist[e.v][e.u], e.w_vu);
  }
  for (std::uint32_t k = 0; k < n; ++k)
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = 0; j < n; ++j)
        if (dist[i][k] + dist[k][j] < dist[i][j]) dist[i][j] = dist[i][k] + dist[k][j];

  std::map<std::uint32_t, OracleRoute> out;
  out[root] = {0, root};
  for (std::uint32_t v = 0; v < n; ++v) {
    if (v == root || dist[root][v] >= kInf) continue;
    std::optional<std::uint32_t> first_hop;
    for (const GraphEdge& e : edges) {
      // Neighbor candidates adjacent to root.
      for (auto [nb, w] : {std::make_pair(e.u == root ? e.v : 0xFFFFFFFFu, e.w_uv),
                           std::make_pair(e.v == root ? e.u : 0xFFFFFFFFu, e.w_vu)}) {
        if (nb == 0xFFFFFFFFu) continue;
        if (w + dist[nb][v] == dist[root][v])
          if (!first_hop || nb < *first_hop) first_hop = nb;
      }
    }
    if (first_hop)
      out[v] = {static_cast<std::uint32_t>(dist[root][v]), *first_hop};
  }
  return out;
}

}  // namespace roq::oracle
