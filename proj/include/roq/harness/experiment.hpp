#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "roq/bgp/router.hpp"
#include "roq/harness/config.hpp"
#include "roq/harness/report.hpp"
#include "roq/harness/rib.hpp"
#include "roq/netsim.hpp"
#include "roq/ospf/router.hpp"
#include "roq/transport.hpp"

namespace roq::harness {

enum class RunStatus : std::uint8_t { Ok, SessionFailed, TimeCap };

// --- BGP triangle experiment ---------------------------------------------------
//
// Replicates the four-router measurement: an injector feeds R1 a routing
// table over a tcp-like session (mirroring a route injector speaking plain
// BGP), R1/R2/R3 run the configured transport among themselves, and every
// prefix is timestamped when R1 hears it back from R2 and from R3.

struct BgpExperimentResult {
  RunStatus status = RunStatus::Ok;
  bool partial = false;
  sim::TimeUs injected_at_us = 0;
  sim::TimeUs finished_at_us = 0;
  std::vector<BgpMeasurement> records;
  /// Per directed session, the digest sequence of BGP messages sent, for
  /// the transport-independence comparison.
  std::map<std::string, std::vector<std::uint64_t>> message_digests;
  /// Transport backend per session pair ("injector-R1" stays tcp-like no
  /// matter what the mesh uses).
  std::map<std::string, std::string> session_kinds;
  bool loop_free = true;
  std::uint64_t dropped_datagrams = 0;

  std::vector<sim::TimeUs> complete_latencies() const {
    std::vector<sim::TimeUs> out;
    for (const auto& r : records)
      if (r.complete()) out.push_back(r.latency_us());
    return out;
  }
  std::size_t complete_count() const {
    std::size_t n = 0;
    for (const auto& r : records)
      if (r.complete()) ++n;
    return n;
  }
};

namespace detail_bgp {
constexpr std::uint32_t kInjectorAs = 64500, kR1As = 64501, kR2As = 64502, kR3As = 64503;
constexpr std::uint32_t kInjectorId = 100, kR1Id = 101, kR2Id = 102, kR3Id = 103;
}  // namespace detail_bgp

inline BgpExperimentResult run_bgp_experiment(const ExperimentConfig& cfg,
                                              const std::vector<bgp::RibRoute>& routes) {
  using namespace detail_bgp;
  namespace tpt = roq::transport;
  BgpExperimentResult result;

  sim::Simulator sim(cfg.seed);
  tpt::TransportSystem tp(sim);

  std::map<std::string, sim::NodeId> node_of;
  for (const std::string& n : cfg.nodes) node_of[n] = sim.add_node(n);
  for (const LinkConfig& l : cfg.links)
    sim.add_link({node_of.at(l.a), node_of.at(l.b), l.delay_ms * sim::kMicrosPerMilli,
                  l.loss, l.mtu});

  struct Spec {
    const char* name;
    std::uint32_t as, id;
  };
  const std::map<std::string, Spec> specs = {
      {"injector", {"injector", kInjectorAs, kInjectorId}},
      {"R1", {"R1", kR1As, kR1Id}},
      {"R2", {"R2", kR2As, kR2Id}},
      {"R3", {"R3", kR3As, kR3Id}}};

  // Identities pinned pairwise across the four routers.
  std::map<std::string, tpt::SecurityConfig> secs;
  std::set<std::uint64_t> pins;
  for (const auto& [name, s] : specs) {
    secs[name] = tpt::SecurityConfig::self_signed(name, bgp::kBgpAlpn);
    pins.insert(secs[name].fingerprint());
  }
  std::map<std::string, std::unique_ptr<bgp::BgpRouter>> routers;
  for (const auto& [name, s] : specs) {
    bgp::BgpRouterConfig rc;
    rc.name = name;
    rc.node = node_of.at(name);
    rc.local_as = s.as;
    rc.bgp_id = s.id;
    rc.secure = secs[name];
    rc.secure->trust = tpt::TrustMode::PinnedFingerprints;
    rc.secure->pinned = pins;
    routers[name] = std::make_unique<bgp::BgpRouter>(sim, tp, rc);
  }

  tpt::TransportKind mesh_kind = cfg.transport == TransportChoice::Quic
                                     ? tpt::TransportKind::SecureMux
                                     : tpt::TransportKind::PlainStream;
  auto wire = [&](const char* x, const char* y, tpt::TransportKind kind) {
    const Spec& sx = specs.at(x);
    const Spec& sy = specs.at(y);
    routers[x]->add_peer({y, node_of.at(y), sy.as, sy.id, kind});
    routers[y]->add_peer({x, node_of.at(x), sx.as, sx.id, kind});
    result.session_kinds[std::string(x) + "-" + y] = tpt::kind_name(kind);
  };
  // The injector speaks tcp-like no matter what the mesh uses.
  wire("injector", "R1", tpt::TransportKind::PlainStream);
  wire("R1", "R2", mesh_kind);
  wire("R1", "R3", mesh_kind);
  wire("R2", "R3", mesh_kind);

  // Message digests per directed session, for cross-transport comparison.
  std::map<std::uint32_t, std::string> name_of_id;
  for (const auto& [name, s] : specs) name_of_id[s.id] = name;
  for (const auto& [name, r] : routers) {
    std::string from = name;
    r->on_message_sent = [&result, &name_of_id, from](std::uint32_t peer, const Bytes& m) {
      result.message_digests[from + "->" + name_of_id.at(peer)].push_back(
          fnv1a64(ByteView(m.data(), m.size())));
    };
  }

  // Measurement taps at R1.
  std::map<Prefix, std::size_t> index_of;
  std::size_t complete_count = 0;
  result.records.reserve(routes.size());
  routers["R1"]->on_update_received = [&](std::uint32_t peer, const Prefix& p, bool,
                                          sim::TimeUs t) {
    auto it = index_of.find(p);
    if (it == index_of.end()) return;
    BgpMeasurement& m = result.records[it->second];
    bool was_complete = m.complete();
    if (peer == kR2Id && m.t_r2_us < 0) m.t_r2_us = t;
    if (peer == kR3Id && m.t_r3_us < 0) m.t_r3_us = t;
    if (!was_complete && m.complete()) ++complete_count;
  };

  // Loop-freedom monitor: sampled during the run, full check at the end.
  std::uint64_t change_count = 0;
  for (const auto& [name, r] : routers) {
    bgp::BgpRouter* rp = r.get();
    r->on_locrib_change = [&result, rp, &change_count](const Prefix&, sim::TimeUs) {
      if ((++change_count & 0x3FF) == 0 && !rp->loop_free()) result.loop_free = false;
    };
  }

  for (auto& [name, r] : routers) r->start();
  auto all_up = [&] {
    for (const auto& [name, r] : routers)
      if (!r->all_established()) return false;
    return true;
  };
  sim::TimeUs cap_us = cfg.time_cap_s * sim::kMicrosPerSecond;
  auto up = sim.run_until(all_up, cap_us);
  if (up.reason != sim::StopReason::PredicateHolds) {
    result.status = RunStatus::SessionFailed;
    return result;
  }

  result.injected_at_us = sim.now();
  for (const auto& r : routes) {
    index_of[r.prefix] = result.records.size();
    result.records.push_back(BgpMeasurement{r.prefix, result.injected_at_us, -1, -1});
  }
  routers["injector"]->originate_many(routes);

  auto all_back = [&] { return complete_count == result.records.size(); };
  auto done = sim.run_until(all_back, cap_us);
  result.finished_at_us = done.at;
  if (!all_back()) {
    result.status = RunStatus::TimeCap;
    result.partial = true;
  }

  for (const auto& [name, r] : routers)
    if (!r->loop_free()) result.loop_free = false;
  result.dropped_datagrams = sim.dropped_datagrams();
  return result;
}

inline BgpExperimentResult run_bgp_experiment(const ExperimentConfig& cfg) {
  if (!cfg.rib) fail(Errc::InvalidValue, "bgp experiment without a rib source");
  std::vector<bgp::RibRoute> routes;
  if (cfg.rib->kind == RibSourceConfig::Kind::Generate) {
    routes = generate_rib(cfg.rib->count, cfg.seed);
  } else {
    IngestResult in = ingest_rib(cfg.rib->path);
    if (!in.ok()) fail(Errc::InvalidValue, "rib file rejected: " + in.errors[0].message);
    routes = std::move(in.routes);
  }
  return run_bgp_experiment(cfg, routes);
}

/// Raw + summary + CDF files under `dir`.
inline void emit_bgp_report(const BgpExperimentResult& r, const std::string& dir) {
  write_file(dir + "/raw.csv", bgp_records_csv(r.records));
  LatencySummary s = summarize_latencies(r.complete_latencies());
  write_file(dir + "/summary.csv", summary_csv(s));
  write_file(dir + "/cdf.csv", cdf_csv(r.complete_latencies()));
}

// --- OSPF mesh experiment --------------------------------------------------------
//
// Phase 1: cold-start convergence of the configured mesh. Phase 2: inject
// one external prefix at the first node and measure reconvergence. The
// reported reconvergence time is max(last route-table change) - injection;
// the protocol-settle time additionally waits out acknowledgments.

struct OspfExperimentResult {
  RunStatus status = RunStatus::Ok;
  sim::TimeUs cold_converged_at_us = 0;
  sim::TimeUs injected_at_us = 0;
  sim::TimeUs route_settled_at_us = 0;
  sim::TimeUs protocol_settled_at_us = 0;
  sim::TimeUs reconvergence_us = 0;     // route settle - injection
  sim::TimeUs protocol_settle_us = 0;   // converged() - injection
  std::uint64_t misrouted_packets = 0;

  std::vector<std::pair<std::string, sim::TimeUs>> markers() const {
    return {{"cold_start_converged", cold_converged_at_us},
            {"injected", injected_at_us},
            {"route_settled", route_settled_at_us},
            {"reconverged", protocol_settled_at_us},
            {"reconvergence_us", reconvergence_us},
            {"protocol_settle_us", protocol_settle_us}};
  }
};

inline OspfExperimentResult run_ospf_experiment(const ExperimentConfig& cfg) {
  namespace tpt = roq::transport;
  OspfExperimentResult result;

  sim::Simulator sim(cfg.seed);
  tpt::TransportSystem tp(sim);
  std::map<std::string, sim::NodeId> node_of;
  for (const std::string& n : cfg.nodes) node_of[n] = sim.add_node(n);
  std::map<std::pair<std::string, std::string>, sim::LinkId> link_of;
  for (const LinkConfig& l : cfg.links)
    link_of[{l.a, l.b}] = sim.add_link({node_of.at(l.a), node_of.at(l.b),
                                        l.delay_ms * sim::kMicrosPerMilli, l.loss, l.mtu});

  ospf::OspfMode mode = cfg.transport == TransportChoice::Quic ? ospf::OspfMode::OverQuic
                                                               : ospf::OspfMode::Native;
  std::set<std::uint64_t> pins;
  std::map<std::string, tpt::SecurityConfig> secs;
  for (const std::string& n : cfg.nodes) {
    secs[n] = tpt::SecurityConfig::self_signed(n, ospf::kOspfAlpn);
    pins.insert(secs[n].fingerprint());
  }

  std::map<std::string, ospf::RouterId> id_of;
  ospf::RouterId next_id = 1;
  for (const std::string& n : cfg.nodes) id_of[n] = next_id++;

  std::vector<std::unique_ptr<ospf::OspfRouter>> routers;
  std::map<std::string, ospf::OspfRouter*> router_of;
  for (const std::string& n : cfg.nodes) {
    ospf::OspfConfig oc;
    oc.name = n;
    oc.node = node_of.at(n);
    oc.router_id = id_of.at(n);
    oc.mode = mode;
    oc.delegate_acks = cfg.delegate_acks;
    if (mode == ospf::OspfMode::OverQuic) {
      tpt::SecurityConfig sc = secs[n];
      sc.trust = tpt::TrustMode::PinnedFingerprints;
      sc.pinned = pins;
      oc.secure = sc;
    }
    routers.push_back(std::make_unique<ospf::OspfRouter>(sim, tp, oc));
    router_of[n] = routers.back().get();
  }
  for (const LinkConfig& l : cfg.links) {
    sim::LinkId link = link_of.at({l.a, l.b});
    router_of[l.a]->add_interface({link, id_of.at(l.b), node_of.at(l.b), l.cost});
    router_of[l.b]->add_interface({link, id_of.at(l.a), node_of.at(l.a), l.cost});
  }

  std::vector<ospf::OspfRouter*> all;
  for (auto& r : routers) all.push_back(r.get());

  for (auto& r : routers) r->start();
  sim::TimeUs cap_us = cfg.time_cap_s * sim::kMicrosPerSecond;
  auto cold = sim.run_until([&] { return ospf::converged(all); }, cap_us);
  if (cold.reason != sim::StopReason::PredicateHolds) {
    result.status = RunStatus::TimeCap;
    return result;
  }
  result.cold_converged_at_us = cold.at;

  result.injected_at_us = sim.now();
  router_of[cfg.nodes.front()]->originate_external(*Prefix::parse("198.51.100.0/24"), 20);
  auto reconv = sim.run_until([&] { return ospf::converged(all); },
                              result.injected_at_us + cap_us);
  if (reconv.reason != sim::StopReason::PredicateHolds) {
    result.status = RunStatus::TimeCap;
    return result;
  }
  result.protocol_settled_at_us = reconv.at;
  sim::TimeUs last_change = 0;
  for (ospf::OspfRouter* r : all) last_change = std::max(last_change, r->last_route_change());
  result.route_settled_at_us = last_change;
  result.reconvergence_us = result.route_settled_at_us - result.injected_at_us;
  result.protocol_settle_us = result.protocol_settled_at_us - result.injected_at_us;
  for (ospf::OspfRouter* r : all) result.misrouted_packets += r->misrouted_packets();
  return result;
}

inline void emit_ospf_report(const OspfExperimentResult& r, const std::string& dir) {
  write_file(dir + "/convergence.csv", ospf_markers_csv(r.markers()));
}

// --- config builders (CLI bench subcommands) --------------------------------------

inline ExperimentConfig bgp_triangle_config(TransportChoice transport, std::size_t routes,
                                            std::uint64_t seed, std::int64_t delay_ms = 10,
                                            double loss = 0.0) {
  ExperimentConfig cfg;
  cfg.protocol = Protocol::Bgp;
  cfg.transport = transport;
  cfg.seed = seed;
  cfg.rib = RibSourceConfig{RibSourceConfig::Kind::Generate, routes, ""};
  cfg.nodes = {"injector", "R1", "R2", "R3"};
  for (auto [a, b] : {std::make_pair("injector", "R1"), std::make_pair("R1", "R2"),
                      std::make_pair("R1", "R3"), std::make_pair("R2", "R3")}) {
    LinkConfig l;
    l.a = a;
    l.b = b;
    l.delay_ms = delay_ms;
    l.loss = loss;
    cfg.links.push_back(l);
  }
  return cfg;
}

inline ExperimentConfig ospf_mesh_config(TransportChoice transport, bool delegate_acks,
                                         std::size_t nodes, std::uint64_t seed,
                                         std::int64_t delay_ms = 10, double loss = 0.0) {
  ExperimentConfig cfg;
  cfg.protocol = Protocol::Ospf;
  cfg.transport = transport;
  cfg.delegate_acks = delegate_acks;
  cfg.seed = seed;
  for (std::size_t i = 1; i <= nodes; ++i) cfg.nodes.push_back("r" + std::to_string(i));
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t j = i + 1; j < nodes; ++j) {
      LinkConfig l;
      l.a = cfg.nodes[i];
      l.b = cfg.nodes[j];
      l.delay_ms = delay_ms;
      l.loss = loss;
      cfg.links.push_back(l);
    }
  return cfg;
}

}  // namespace roq::harness
