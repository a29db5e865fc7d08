#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>

#include "roq/ospf/router.hpp"

using namespace roq;
using namespace roq::sim;
using namespace roq::ospf;
namespace tpt = roq::transport;

namespace {

constexpr TimeUs kDelay = 10 * kMicrosPerMilli;

/// Full mesh of n OSPF routers with ids 1..n.
struct Mesh {
  Simulator sim;
  tpt::TransportSystem tp;
  std::vector<NodeId> nodes;
  std::vector<std::unique_ptr<OspfRouter>> routers;
  std::vector<std::vector<LinkId>> links;  // links[i][j] for i<j

  Mesh(std::size_t n, OspfMode mode, bool delegate_acks, std::uint64_t seed,
       double loss = 0.0)
      : sim(seed), tp(sim), links(n, std::vector<LinkId>(n, 0)) {
    std::set<std::uint64_t> fingerprints;
    std::vector<tpt::SecurityConfig> secs;
    for (std::size_t i = 0; i < n; ++i) {
      std::string name = "r" + std::to_string(i + 1);
      nodes.push_back(sim.add_node(name));
      secs.push_back(tpt::SecurityConfig::self_signed(name, kOspfAlpn));
      fingerprints.insert(secs.back().fingerprint());
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        links[i][j] = sim.add_link({nodes[i], nodes[j], kDelay, loss, 1500});
    for (std::size_t i = 0; i < n; ++i) {
      OspfConfig cfg;
      cfg.name = "r" + std::to_string(i + 1);
      cfg.node = nodes[i];
      cfg.router_id = static_cast<RouterId>(i + 1);
      cfg.mode = mode;
      cfg.delegate_acks = delegate_acks;
      if (mode == OspfMode::OverQuic) {
        tpt::SecurityConfig sc = secs[i];
        sc.trust = tpt::TrustMode::PinnedFingerprints;
        sc.pinned = fingerprints;
        cfg.secure = sc;
      }
      routers.push_back(std::make_unique<OspfRouter>(sim, tp, cfg));
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        std::size_t lo = std::min(i, j), hi = std::max(i, j);
        routers[i]->add_interface({links[lo][hi], static_cast<RouterId>(j + 1), nodes[j], 10});
      }
  }

  std::vector<OspfRouter*> ptrs() {
    std::vector<OspfRouter*> out;
    for (auto& r : routers) out.push_back(r.get());
    return out;
  }

  StopResult start_and_converge(TimeUs cap = 300 * kMicrosPerSecond) {
    for (auto& r : routers) r->start();
    auto rs = ptrs();
    return sim.run_until([rs] { return converged(rs); }, cap);
  }
};

}  // namespace

TEST_CASE("6-node mesh converges from cold start in Native mode") {
  Mesh m(6, OspfMode::Native, false, 11);
  auto stop = m.start_and_converge();
  REQUIRE(stop.reason == StopReason::PredicateHolds);

  // All 6 LSDBs identical, six router LSAs each.
  for (auto& r : m.routers) {
    CHECK(r->lsdb().same_content(m.routers[0]->lsdb()));
    CHECK(r->lsdb().contents().size() == 6);
  }
  // Full reachability at mesh cost 10.
  for (auto& r : m.routers) {
    CHECK(r->route_table().routers.size() == 6);
    for (const auto& [dst, e] : r->route_table().routers)
      if (dst != r->id()) CHECK(e.cost == 10);
  }
  CHECK(m.sim.dropped_datagrams() == 0);
}

TEST_CASE("6-node mesh converges over QUIC with pinned identities") {
  Mesh m(6, OspfMode::OverQuic, false, 12);
  auto stop = m.start_and_converge();
  REQUIRE(stop.reason == StopReason::PredicateHolds);
  for (auto& r : m.routers) CHECK(r->lsdb().same_content(m.routers[0]->lsdb()));

  // Handshake placement: after 2-Way no DBD/LSR/LSU/LsAck on the datagram
  // path, no Hello on the stream.
  for (auto& r : m.routers) {
    CHECK(r->misrouted_packets() == 0);
    CHECK(r->native_sent(PacketType::DbDescription) == 0);
    CHECK(r->native_sent(PacketType::LsRequest) == 0);
    CHECK(r->native_sent(PacketType::LsUpdate) == 0);
    CHECK(r->native_sent(PacketType::LsAck) == 0);
    CHECK(r->stream_sent(PacketType::Hello) == 0);
    CHECK(r->native_sent(PacketType::Hello) > 0);
    CHECK(r->stream_received(PacketType::DbDescription) > 0);
  }
}

TEST_CASE("overhead ordering: cold-start convergence Native <= OverQuic") {
  Mesh native(6, OspfMode::Native, false, 13);
  Mesh quic(6, OspfMode::OverQuic, false, 13);
  auto t_native = native.start_and_converge();
  auto t_quic = quic.start_and_converge();
  REQUIRE(t_native.reason == StopReason::PredicateHolds);
  REQUIRE(t_quic.reason == StopReason::PredicateHolds);
  CHECK(t_quic.at >= t_native.at);
}

TEST_CASE("single LSA injection floods once per direction and settles") {
  Mesh m(6, OspfMode::Native, false, 14);
  auto stop = m.start_and_converge();
  REQUIRE(stop.reason == StopReason::PredicateHolds);

  std::uint64_t before = 0;
  for (auto& r : m.routers) before += r->lsa_transmissions();

  m.routers[0]->originate_external(*Prefix::parse("203.0.113.0/24"), 20);
  auto rs = m.ptrs();
  auto stop2 = m.sim.run_until(
      [&] {
        if (!converged(rs)) return false;
        for (auto& r : m.routers)
          if (!r->lsdb().find({LsaType::ExternalPrefixLsa, 1, 1})) return false;
        return true;
      },
      m.sim.now() + 100 * kMicrosPerSecond);
  REQUIRE(stop2.reason == StopReason::PredicateHolds);

  // Flood oracle: origin sends on its 5 adjacencies, each receiver refloods
  // on at most 4; duplicates are suppressed -> between 5 and 25 copies, and
  // never above 2 * |links| = 30.
  std::uint64_t flooded = 0;
  for (auto& r : m.routers) flooded += r->lsa_transmissions();
  flooded -= before;
  CHECK(flooded >= 5 + 4 * 5);
  CHECK(flooded <= 2 * 15);
  // Every router holds the prefix route.
  for (auto& r : m.routers) {
    REQUIRE(r->route_table().prefixes.count(*Prefix::parse("203.0.113.0/24")) == 1);
  }
}

TEST_CASE("reconvergence ordering across the three modes on identical seeds") {
  auto reconverge = [](OspfMode mode, bool delegate) {
    Mesh m(6, mode, delegate, 15);
    auto stop = m.start_and_converge();
    REQUIRE(stop.reason == StopReason::PredicateHolds);
    TimeUs inject_at = m.sim.now();
    m.routers[0]->originate_external(*Prefix::parse("198.51.100.0/24"), 20);
    auto rs = m.ptrs();
    auto stop2 =
        m.sim.run_until([&] { return converged(rs); }, inject_at + 100 * kMicrosPerSecond);
    REQUIRE(stop2.reason == StopReason::PredicateHolds);
    return stop2.at - inject_at;
  };
  TimeUs native = reconverge(OspfMode::Native, false);
  TimeUs fidelity = reconverge(OspfMode::OverQuic, false);
  TimeUs delegated = reconverge(OspfMode::OverQuic, true);
  CHECK(fidelity >= native);
  CHECK(delegated <= fidelity);
}

TEST_CASE("partitioning one router reconverges the remaining five") {
  Mesh m(6, OspfMode::Native, false, 16);
  auto stop = m.start_and_converge();
  REQUIRE(stop.reason == StopReason::PredicateHolds);

  // Cut every link touching r6 (index 5).
  for (std::size_t i = 0; i < 5; ++i) m.sim.set_link_loss(m.links[i][5], 1.0);

  std::vector<OspfRouter*> rest;
  for (std::size_t i = 0; i < 5; ++i) rest.push_back(m.routers[i].get());
  auto rs = m.ptrs();
  // Convergence among the survivors: pairwise Full, identical LSDBs, no
  // outstanding flooding state, and route tables free of the cut router.
  auto five_ok = [&] {
    for (OspfRouter* a : rest) {
      if (!a->flooding_quiescent()) return false;
      if (!a->lsdb().same_content(rest[0]->lsdb())) return false;
      if (a->route_table().routers.size() != 5) return false;
      if (a->route_table().routers.count(6)) return false;
      for (OspfRouter* b : rest)
        if (a != b && a->neighbor_phase(b->id()) != NbrPhase::Full) return false;
    }
    return true;
  };
  auto stop2 = m.sim.run_until([&] { return five_ok(); },
                               m.sim.now() + 300 * kMicrosPerSecond);
  REQUIRE(stop2.reason == StopReason::PredicateHolds);
  // The partition is noticed only after dead_interval (40 s) elapses, and
  // full-set convergence can never hold again while r6 is cut off.
  CHECK(stop2.at >= stop.at + 40 * kMicrosPerSecond);
  CHECK_FALSE(converged(rs));
  for (OspfRouter* r : rest) CHECK(r->neighbor_phase(6) < NbrPhase::Full);
}

TEST_CASE("mesh converges under 5% loss in both modes") {
  for (OspfMode mode : {OspfMode::Native, OspfMode::OverQuic}) {
    Mesh m(6, mode, false, 17, /*loss=*/0.05);
    auto stop = m.start_and_converge(300 * kMicrosPerSecond);
    REQUIRE(stop.reason == StopReason::PredicateHolds);
    for (auto& r : m.routers) CHECK(r->lsdb().same_content(m.routers[0]->lsdb()));
    CHECK(m.sim.dropped_datagrams() > 0);
  }
}
