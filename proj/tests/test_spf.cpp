#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "roq/ospf/spf.hpp"
#include "roq/rng.hpp"
#include "support/oracles.hpp"

using namespace roq;
using namespace roq::ospf;

namespace {

Lsa router_lsa(RouterId r, std::vector<RouterLink> links) {
  Lsa l;
  l.key = {LsaType::RouterLsa, r, r};
  l.body = RouterLsaBody{std::move(links)};
  return l;
}

Lsa external_lsa(RouterId r, std::uint32_t id, const Prefix& p, std::uint32_t cost) {
  Lsa l;
  l.key = {LsaType::ExternalPrefixLsa, r, id};
  l.body = ExternalLsaBody{p, cost};
  return l;
}

// Symmetric link helper.
void add_bilink(std::map<RouterId, std::vector<RouterLink>>& g, RouterId a, RouterId b,
                std::uint32_t cost) {
  g[a].push_back({b, cost});
  g[b].push_back({a, cost});
}

Lsdb db_from(const std::map<RouterId, std::vector<RouterLink>>& g) {
  Lsdb db;
  for (const auto& [r, links] : g) db.install(router_lsa(r, links));
  return db;
}

}  // namespace

TEST_CASE("triangle A-B(1), B-C(1), A-C(5): route to C goes via B at cost 2") {
  std::map<RouterId, std::vector<RouterLink>> g;
  add_bilink(g, 1, 2, 1);
  add_bilink(g, 2, 3, 1);
  add_bilink(g, 1, 3, 5);
  Lsdb db = db_from(g);
  RouteTable t = spf_compute(db, 1);
  REQUIRE(t.routers.count(3) == 1);
  CHECK(t.routers.at(3).cost == 2);
  CHECK(t.routers.at(3).next_hop == 2);
  CHECK(t.routers.at(2).cost == 1);
  CHECK(t.routers.at(1).cost == 0);
}

TEST_CASE("a link advertised by only one endpoint is ignored") {
  std::map<RouterId, std::vector<RouterLink>> g;
  g[1].push_back({2, 1});  // 1 claims a link to 2
  g[2];                    // 2 does not claim it back
  Lsdb db = db_from(g);
  RouteTable t = spf_compute(db, 1);
  CHECK(t.routers.count(2) == 0);
  CHECK(t.routers.size() == 1);  // self only
}

TEST_CASE("root with an empty database beyond its own LSA routes to itself only") {
  Lsdb db;
  db.install(router_lsa(7, {}));
  RouteTable t = spf_compute(db, 7);
  CHECK(t.routers.size() == 1);
  CHECK(t.routers.at(7).cost == 0);
  CHECK(t.prefixes.empty());
}

TEST_CASE("missing root LSA yields an empty table") {
  Lsdb db;
  db.install(router_lsa(1, {}));
  CHECK(spf_compute(db, 9).routers.empty());
}

TEST_CASE("external prefixes attach at their advertiser, cheapest wins") {
  std::map<RouterId, std::vector<RouterLink>> g;
  add_bilink(g, 1, 2, 1);
  add_bilink(g, 2, 3, 1);
  Lsdb db = db_from(g);
  Prefix p = *Prefix::parse("203.0.113.0/24");
  db.install(external_lsa(3, 1, p, 10));  // via 3: 2 + 10
  db.install(external_lsa(2, 1, p, 20));  // via 2: 1 + 20
  RouteTable t = spf_compute(db, 1);
  REQUIRE(t.prefixes.count(p) == 1);
  CHECK(t.prefixes.at(p).cost == 12);
  CHECK(t.prefixes.at(p).next_hop == 2);

  // An unreachable advertiser contributes nothing.
  Prefix q = *Prefix::parse("198.51.100.0/24");
  db.install(external_lsa(9, 1, q, 1));
  t = spf_compute(db, 1);
  CHECK(t.prefixes.count(q) == 0);
}

TEST_CASE("equal-cost tie breaks to the lowest next-hop router id") {
  std::map<RouterId, std::vector<RouterLink>> g;
  add_bilink(g, 1, 2, 1);
  add_bilink(g, 1, 3, 1);
  add_bilink(g, 2, 4, 1);
  add_bilink(g, 3, 4, 1);
  Lsdb db = db_from(g);
  RouteTable t = spf_compute(db, 1);
  REQUIRE(t.routers.count(4) == 1);
  CHECK(t.routers.at(4).cost == 2);
  CHECK(t.routers.at(4).next_hop == 2);  // 2 < 3
}

TEST_CASE("1000 seeded random graphs match the brute-force oracle") {
  SplitMix64 g(80486);
  for (int trial = 0; trial < 1000; ++trial) {
    std::uint32_t n = static_cast<std::uint32_t>(g.range(2, 8));
    std::map<RouterId, std::vector<RouterLink>> adj;
    std::vector<oracle::GraphEdge> edges;
    for (std::uint32_t i = 0; i < n; ++i) adj[i + 1];  // router ids 1..n
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = i + 1; j < n; ++j)
        if (g.chance(0.45)) {
          std::uint32_t w = static_cast<std::uint32_t>(g.range(1, 20));
          add_bilink(adj, i + 1, j + 1, w);
          edges.push_back({i, j, w, w});
        }
    Lsdb db = db_from(adj);
    std::uint32_t root_idx = static_cast<std::uint32_t>(g.range(0, n - 1));
    RouteTable got = spf_compute(db, root_idx + 1);
    auto want = oracle::brute_force_spf(n, edges, root_idx);

    REQUIRE(got.routers.size() == want.size());
    for (const auto& [v, w] : want) {
      REQUIRE(got.routers.count(v + 1) == 1);
      const RouteEntry& e = got.routers.at(v + 1);
      CHECK(e.cost == w.cost);
      CHECK(e.next_hop == w.next_hop + 1);
    }
  }
}
