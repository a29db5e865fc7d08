#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "roq/netsim.hpp"
#include "roq/ospf/neighbor.hpp"
#include "roq/ospf/spf.hpp"
#include "roq/transport.hpp"

namespace roq::ospf {

constexpr std::uint16_t kOspfPort = 89;
constexpr const char* kOspfAlpn = "roq-ospf/1";

/// Encoded LsUpdate packets are kept at or under this size when OSPF does
/// its own fragmentation (Native, and OverQuic in paper-fidelity mode).
/// With --delegate-acks the stream carries whole updates and the transport
/// segments them.
constexpr std::size_t kOspfFragmentBytes = 1200;

struct OspfInterface {
  sim::LinkId link = 0;
  RouterId peer = 0;
  sim::NodeId peer_node = 0;
  std::uint32_t cost = 10;
};

struct OspfConfig {
  std::string name;
  sim::NodeId node = 0;
  RouterId router_id = 0;
  OspfMode mode = OspfMode::Native;
  /// OverQuic only: skip OSPF-level acks and retransmission lists; the
  /// reliable stream already guarantees delivery.
  bool delegate_acks = false;
  std::uint32_t hello_interval_s = 10;
  std::uint32_t dead_interval_s = 40;
  std::uint32_t rxmt_interval_s = 5;
  std::optional<transport::SecurityConfig> secure;
};

/// Single-area point-to-point OSPF speaker. In OverQuic mode the Hello
/// exchange is unchanged; reaching 2-Way establishes a SecureMux connection
/// to the peer and all later packets ride one bidirectional stream.
class OspfRouter {
 public:
  OspfRouter(sim::Simulator& s, transport::TransportSystem& tp, OspfConfig cfg)
      : sim_(s), tp_(tp), cfg_(std::move(cfg)) {
    if (cfg_.mode == OspfMode::OverQuic && !cfg_.secure)
      fail(Errc::MissingSecurityConfig, "OverQuic mode requires a SecurityConfig");
  }

  OspfRouter(const OspfRouter&) = delete;
  OspfRouter& operator=(const OspfRouter&) = delete;

  std::function<void(RouterId peer, NbrPhase, sim::TimeUs)> on_adjacency_change;
  std::function<void(const LsaKey&, std::int32_t seq, sim::TimeUs)> on_lsdb_change;
  std::function<void(sim::TimeUs)> on_route_table_change;

  void add_interface(const OspfInterface& ifc) {
    Neighbor n;
    n.ifc = ifc;
    n.core.self = cfg_.router_id;
    n.core.peer = ifc.peer;
    n.core.mode = cfg_.mode;
    neighbors_.emplace(ifc.peer, std::move(n));
  }

  void start() {
    tp_.attach(cfg_.node);
    tp_.set_raw_sink(cfg_.node, [this](sim::LinkId link, sim::NodeId from, const Bytes& b) {
      on_native_datagram(link, from, b);
    });
    if (cfg_.mode == OspfMode::OverQuic) {
      tp_.open_listener({cfg_.node, kOspfPort}, transport::TransportKind::SecureMux,
                        cfg_.secure,
                        [this](const transport::TransportEvent& e) { on_transport_event(e); });
    }
    regenerate_router_lsa();
    for (auto& [peer, n] : neighbors_) hello_tick(n);
    arm_aging_timer();
  }

  /// Injects a locally originated external prefix and floods it.
  void originate_external(const Prefix& p, std::uint32_t cost) {
    Lsa l;
    l.key = {LsaType::ExternalPrefixLsa, cfg_.router_id, next_external_id_++};
    const Lsa* stored = db_.find(l.key);
    l.seq = stored ? stored->seq + 1 : kInitialSeq;
    l.body = ExternalLsaBody{p, cost};
    install_and_flood(l, std::nullopt);
  }

  const Lsdb& lsdb() const { return db_; }
  const RouteTable& route_table() const { return table_; }
  sim::TimeUs last_route_change() const { return last_route_change_; }
  RouterId id() const { return cfg_.router_id; }
  const OspfConfig& config() const { return cfg_; }

  NbrPhase neighbor_phase(RouterId peer) const {
    auto it = neighbors_.find(peer);
    return it == neighbors_.end() ? NbrPhase::Down : it->second.core.phase;
  }

  bool all_full() const {
    for (const auto& [p, n] : neighbors_)
      if (n.core.phase != NbrPhase::Full) return false;
    return !neighbors_.empty();
  }

  bool flooding_quiescent() const { return db_.quiescent(); }

  // Traffic accounting, used by the handshake-placement assertions: in
  // OverQuic mode nothing but Hello may use the datagram path after 2-Way,
  // and Hello never rides the stream.
  std::uint64_t native_sent(PacketType t) const { return native_tx_[idx(t)]; }
  std::uint64_t native_received(PacketType t) const { return native_rx_[idx(t)]; }
  std::uint64_t stream_sent(PacketType t) const { return stream_tx_[idx(t)]; }
  std::uint64_t stream_received(PacketType t) const { return stream_rx_[idx(t)]; }
  std::uint64_t misrouted_packets() const { return misrouted_; }
  std::uint64_t lsa_transmissions() const { return lsa_transmissions_; }

 private:
  struct Neighbor {
    OspfInterface ifc;
    NeighborCore core;
    sim::TimeUs last_heard = -1;
    std::optional<transport::ConnRef> conn;
    std::optional<transport::StreamId> stream;
    Bytes rx;
    sim::TimerId hello_timer;
    sim::TimerId rxmt_timer;
    bool rxmt_armed = false;
  };

  static std::size_t idx(PacketType t) { return static_cast<std::size_t>(t) - 1; }

  bool ack_mode() const { return !(cfg_.mode == OspfMode::OverQuic && cfg_.delegate_acks); }

  // --- hello & liveness -----------------------------------------------------

  void hello_tick(Neighbor& n) {
    // Dead detection first, so a silent peer drops out of neighbors_seen.
    if (n.core.phase != NbrPhase::Down && n.last_heard >= 0 &&
        sim_.now() - n.last_heard > cfg_.dead_interval_s * sim::kMicrosPerSecond) {
      n.last_heard = -1;
      step(n, EvDead{});
    }
    HelloPacket h;
    h.hello_interval_s = cfg_.hello_interval_s;
    h.dead_interval_s = cfg_.dead_interval_s;
    if (n.last_heard >= 0 &&
        sim_.now() - n.last_heard <= cfg_.dead_interval_s * sim::kMicrosPerSecond)
      h.neighbors_seen.push_back(n.ifc.peer);
    send_native(n, OspfPacket{cfg_.router_id, h});
    RouterId peer = n.ifc.peer;
    n.hello_timer = sim_.set_timer(
        cfg_.node, peer, sim_.now() + cfg_.hello_interval_s * sim::kMicrosPerSecond,
        [this, peer] {
          auto it = neighbors_.find(peer);
          if (it != neighbors_.end()) hello_tick(it->second);
        });
  }

  void arm_aging_timer() {
    aging_timer_ = sim_.set_timer(cfg_.node, 0, sim_.now() + sim::kMicrosPerSecond, [this] {
      db_.age_tick();
      recompute_routes();
      arm_aging_timer();
    });
  }

  // --- packet IO --------------------------------------------------------------

  void send_native(Neighbor& n, const OspfPacket& p) {
    ++native_tx_[idx(packet_type(p))];
    count_lsas(p);
    tp_.send_raw(cfg_.node, n.ifc.link, encode_packet(p));
  }

  void send_stream(Neighbor& n, const OspfPacket& p) {
    if (!n.conn || !n.stream) {
      ++misrouted_;
      return;
    }
    ++stream_tx_[idx(packet_type(p))];
    count_lsas(p);
    Bytes framed = frame_for_stream(p);
    tp_.stream_send(*n.conn, *n.stream, ByteView(framed.data(), framed.size()));
  }

  void count_lsas(const OspfPacket& p) {
    if (const auto* up = std::get_if<LsUpdatePacket>(&p.body))
      lsa_transmissions_ += up->lsas.size();
  }

  /// Post-2-Way packets ride the stream in OverQuic mode, the datagram path
  /// otherwise. Hellos always use the datagram path.
  void send_routed(Neighbor& n, const OspfPacket& p) {
    if (cfg_.mode == OspfMode::OverQuic && packet_type(p) != PacketType::Hello)
      send_stream(n, p);
    else
      send_native(n, p);
  }

  void on_native_datagram(sim::LinkId link, sim::NodeId from, const Bytes& b) {
    (void)from;
    PacketDecode d = decode_packet(ByteView(b.data(), b.size()));
    if (d.status != PacketStatus::Ok || d.consumed != b.size()) return;
    Neighbor* n = neighbor_by_link(link);
    if (!n || n->ifc.peer != d.packet.sender) return;
    ++native_rx_[idx(packet_type(d.packet))];
    if (cfg_.mode == OspfMode::OverQuic && packet_type(d.packet) != PacketType::Hello) {
      ++misrouted_;  // only Hello may use the native path after 2-Way
      return;
    }
    dispatch(*n, d.packet);
  }

  void on_transport_event(const transport::TransportEvent& e) {
    using T = transport::TransportEvent;
    if (e.type == T::Type::Accepted) {
      auto info = tp_.connection(e.conn);
      Neighbor* n = neighbor_by_node(info.remote);
      if (!n) {
        tp_.close(e.conn, 1, "no such adjacency");
        return;
      }
      std::optional<transport::ConnRef> old = n->conn;
      n->conn = e.conn;
      n->stream.reset();
      n->rx.clear();
      if (old) tp_.close(*old, 0, "superseded");
      return;
    }
    Neighbor* n = neighbor_by_conn(e.conn);
    if (!n) return;  // stale
    switch (e.type) {
      case T::Type::Established:
        if (tp_.connection(e.conn).dialer) {
          n->stream = tp_.open_stream(e.conn);
          step(*n, EvQuicEstablished{});
        }
        break;
      case T::Type::StreamOpened:
        if (!n->stream) {
          n->stream = e.stream;
          step(*n, EvQuicEstablished{});
        }
        break;
      case T::Type::Data: {
        n->rx.insert(n->rx.end(), e.data.begin(), e.data.end());
        drain_stream(*n);
        break;
      }
      case T::Type::Closed:
        n->conn.reset();
        n->stream.reset();
        n->rx.clear();
        step(*n, EvQuicFailed{});
        break;
      default:
        break;
    }
  }

  void drain_stream(Neighbor& n) {
    while (!n.rx.empty()) {
      PacketDecode d = decode_framed(ByteView(n.rx.data(), n.rx.size()));
      if (d.status != PacketStatus::Ok) return;  // Truncated: wait for more
      n.rx.erase(n.rx.begin(), n.rx.begin() + static_cast<std::ptrdiff_t>(d.consumed));
      if (d.packet.sender != n.ifc.peer) continue;
      ++stream_rx_[idx(packet_type(d.packet))];
      if (packet_type(d.packet) == PacketType::Hello) {
        ++misrouted_;  // Hellos stay on the datagram path
        continue;
      }
      dispatch(n, d.packet);
    }
  }

  void dispatch(Neighbor& n, const OspfPacket& p) {
    if (const auto* hello = std::get_if<HelloPacket>(&p.body)) {
      if (hello->hello_interval_s != cfg_.hello_interval_s ||
          hello->dead_interval_s != cfg_.dead_interval_s)
        return;  // mismatched interface configuration, dropped
      n.last_heard = sim_.now();
      bool lists_me = false;
      for (RouterId r : hello->neighbors_seen)
        if (r == cfg_.router_id) lists_me = true;
      step(n, EvHelloReceived{lists_me});
    } else if (const auto* dbd = std::get_if<DbDescriptionPacket>(&p.body)) {
      step(n, EvDbdReceived{*dbd});
    } else if (const auto* lsr = std::get_if<LsRequestPacket>(&p.body)) {
      step(n, EvLsRequestReceived{*lsr});
    } else if (const auto* lsu = std::get_if<LsUpdatePacket>(&p.body)) {
      for (const Lsa& l : lsu->lsas) install_and_flood(l, n.ifc.peer);
      step(n, EvLsUpdateReceived{*lsu});
      check_loading_neighbors();
    } else if (const auto* ack = std::get_if<LsAckPacket>(&p.body)) {
      auto& rt = db_.retrans(n.ifc.peer);
      for (const LsaHeader& h : ack->headers) {
        auto it = rt.find(h.key);
        if (it != rt.end() && it->second.seq <= h.seq) rt.erase(it);
      }
      step(n, EvLsAckReceived{*ack});
    }
  }

  // --- FSM plumbing -------------------------------------------------------------

  void step(Neighbor& n, const NbrEvent& e) {
    NbrPhase before = n.core.phase;
    NbrStep r = neighbor_fsm_step(n.core, e, db_);
    n.core = r.next;
    for (const NbrAction& a : r.actions) run_action(n, a);
    if (n.core.phase != before && on_adjacency_change)
      on_adjacency_change(n.ifc.peer, n.core.phase, sim_.now());
    maybe_arm_rxmt(n);
  }

  void run_action(Neighbor& n, const NbrAction& a) {
    if (std::holds_alternative<ActEstablishQuic>(a)) {
      if (n.conn && n.stream) {
        step(n, EvQuicEstablished{});  // connection already up (listener side)
      } else if (n.core.is_master()) {
        transport::SecurityConfig sec = *cfg_.secure;
        n.conn = tp_.dial(cfg_.node, {n.ifc.peer_node, kOspfPort},
                          transport::TransportKind::SecureMux, sec,
                          [this](const transport::TransportEvent& e) { on_transport_event(e); });
        n.stream.reset();
        n.rx.clear();
      }
      // Lower id listens; its EstablishQuic resolves when the dial arrives.
    } else if (const auto* d = std::get_if<ActSendDbd>(&a)) {
      OspfPacket p{cfg_.router_id, d->dbd};
      send_routed(n, p);
    } else if (const auto* rq = std::get_if<ActSendLsRequest>(&a)) {
      auto& pending = db_.requests(n.ifc.peer);
      pending.clear();
      pending.insert(rq->keys.begin(), rq->keys.end());
      LsRequestPacket p;
      p.keys = rq->keys;
      send_routed(n, OspfPacket{cfg_.router_id, p});
    } else if (const auto* ans = std::get_if<ActSendRequestedLsas>(&a)) {
      std::vector<Lsa> lsas;
      for (const LsaKey& k : ans->keys)
        if (const Lsa* l = db_.find(k)) lsas.push_back(aged_copy(*l));
      send_ls_updates(n, lsas, /*track_retrans=*/false);
    } else if (std::holds_alternative<ActSetQuicRetryTimer>(a)) {
      // rxmt timer doubles as the QUIC retry timer while in Init.
    } else if (std::holds_alternative<ActFlushAdjacency>(a)) {
      db_.drop_neighbor_state(n.ifc.peer);
      n.rx.clear();
    } else if (std::holds_alternative<ActRegenerateRouterLsa>(a)) {
      regenerate_router_lsa();
    } else if (std::holds_alternative<ActCloseQuic>(a)) {
      if (n.conn) {
        transport::ConnRef ref = *n.conn;
        n.conn.reset();
        n.stream.reset();
        n.rx.clear();
        tp_.close(ref, 0, "adjacency torn down");
      }
    } else if (std::holds_alternative<ActResendRetrans>(a)) {
      std::vector<Lsa> lsas;
      for (const auto& [k, l] : db_.retrans(n.ifc.peer)) lsas.push_back(l);
      send_ls_updates(n, lsas, /*track_retrans=*/false);
    }
  }

  /// Loading neighbors whose request lists were satisfied by a flood from a
  /// different peer would otherwise wait for an LsUpdate that never comes.
  void check_loading_neighbors() {
    bool progressed = true;
    while (progressed) {
      progressed = false;
      for (auto& [peer, n] : neighbors_)
        if (n.core.phase == NbrPhase::Loading && db_.requests_empty(peer)) {
          step(n, EvLsUpdateReceived{LsUpdatePacket{}});
          progressed = true;
        }
    }
  }

  void maybe_arm_rxmt(Neighbor& n) {
    bool needed = false;
    switch (n.core.phase) {
      case NbrPhase::ExStart:
      case NbrPhase::Exchange:
      case NbrPhase::Loading:
        needed = true;
        break;
      case NbrPhase::Init:
        needed = cfg_.mode == OspfMode::OverQuic && n.core.quic_retries > 0;
        break;
      case NbrPhase::Full: {
        const auto* rt = db_.retrans_of(n.ifc.peer);
        needed = rt && !rt->empty();
        break;
      }
      default:
        break;
    }
    if (!needed || n.rxmt_armed) return;
    n.rxmt_armed = true;
    RouterId peer = n.ifc.peer;
    n.rxmt_timer = sim_.set_timer(
        cfg_.node, peer, sim_.now() + cfg_.rxmt_interval_s * sim::kMicrosPerSecond,
        [this, peer] {
          auto it = neighbors_.find(peer);
          if (it == neighbors_.end()) return;
          it->second.rxmt_armed = false;
          step(it->second, EvRxmtTimerExpired{});
        });
  }

  // --- LSDB, flooding, routes -----------------------------------------------------

  Lsa aged_copy(const Lsa& l) const {
    Lsa out = l;
    out.age = static_cast<std::uint16_t>(std::min<std::uint32_t>(out.age + 1, kMaxAge));
    return out;
  }

  void send_ls_updates(Neighbor& n, const std::vector<Lsa>& lsas, bool track_retrans) {
    if (lsas.empty()) return;
    bool fragment = ack_mode();  // delegate-acks hands segmentation to the stream
    LsUpdatePacket pkt;
    auto flush = [&]() {
      if (pkt.lsas.empty()) return;
      send_routed(n, OspfPacket{cfg_.router_id, pkt});
      pkt.lsas.clear();
    };
    for (const Lsa& l : lsas) {
      if (track_retrans && ack_mode()) db_.retrans(n.ifc.peer)[l.key] = l;
      pkt.lsas.push_back(l);
      if (fragment) {
        OspfPacket probe{cfg_.router_id, pkt};
        if (encode_packet(probe).size() > kOspfFragmentBytes && pkt.lsas.size() > 1) {
          Lsa last = pkt.lsas.back();
          pkt.lsas.pop_back();
          flush();
          pkt.lsas.push_back(last);
        }
      }
    }
    flush();
    if (track_retrans) maybe_arm_rxmt(n);
  }

  /// Core flooding rule: install if newer, flood everywhere except the
  /// source, ack the source (paper-fidelity), answer stale copies with the
  /// stored newer instance.
  void install_and_flood(const Lsa& lsa, std::optional<RouterId> from) {
    Neighbor* src = nullptr;
    if (from) {
      auto it = neighbors_.find(*from);
      if (it != neighbors_.end()) src = &it->second;
    }
    const Lsa* stored = db_.find(lsa.key);
    if (stored) {
      CompareResult cmp = lsdb_compare(header_of(lsa), header_of(*stored));
      if (cmp == CompareResult::BNewer) {
        // Stale copy: answer with the newer stored instance.
        if (src) send_ls_updates(*src, {aged_copy(*stored)}, /*track_retrans=*/false);
        return;
      }
      if (cmp == CompareResult::Same) {
        // Implied acknowledgment: the sender demonstrably holds this
        // instance, so any retransmission entry toward it is satisfied.
        if (src) db_.retrans(*from).erase(lsa.key);
        if (src && ack_mode())
          send_routed(*src, OspfPacket{cfg_.router_id, LsAckPacket{{header_of(*stored)}}});
        return;
      }
    }
    db_.install(lsa);
    db_.satisfy_requests(header_of(lsa));
    if (src) db_.retrans(*from).erase(lsa.key);  // implied ack, newer instance
    if (on_lsdb_change) on_lsdb_change(lsa.key, lsa.seq, sim_.now());
    for (auto& [peer, n] : neighbors_) {
      if (from && peer == *from) continue;
      if (n.core.phase < NbrPhase::Exchange) continue;
      send_ls_updates(n, {aged_copy(lsa)}, /*track_retrans=*/true);
    }
    if (src && ack_mode())
      send_routed(*src, OspfPacket{cfg_.router_id, LsAckPacket{{header_of(lsa)}}});
    recompute_routes();
    if (!checking_loading_) {
      checking_loading_ = true;
      check_loading_neighbors();
      checking_loading_ = false;
    }
  }

  void regenerate_router_lsa() {
    Lsa l;
    l.key = {LsaType::RouterLsa, cfg_.router_id, cfg_.router_id};
    const Lsa* stored = db_.find(l.key);
    l.seq = stored ? stored->seq + 1 : kInitialSeq;
    RouterLsaBody body;
    for (const auto& [peer, n] : neighbors_)
      if (n.core.phase == NbrPhase::Full) body.links.push_back({peer, n.ifc.cost});
    l.body = std::move(body);
    install_and_flood(l, std::nullopt);
  }

  void recompute_routes() {
    RouteTable t = spf_compute(db_, cfg_.router_id);
    if (t == table_) return;
    table_ = std::move(t);
    last_route_change_ = sim_.now();
    if (on_route_table_change) on_route_table_change(sim_.now());
  }

  Neighbor* neighbor_by_link(sim::LinkId link) {
    for (auto& [peer, n] : neighbors_)
      if (n.ifc.link == link) return &n;
    return nullptr;
  }
  Neighbor* neighbor_by_node(sim::NodeId node) {
    for (auto& [peer, n] : neighbors_)
      if (n.ifc.peer_node == node) return &n;
    return nullptr;
  }
  Neighbor* neighbor_by_conn(const transport::ConnRef& ref) {
    for (auto& [peer, n] : neighbors_)
      if (n.conn && *n.conn == ref) return &n;
    return nullptr;
  }

  sim::Simulator& sim_;
  transport::TransportSystem& tp_;
  OspfConfig cfg_;
  Lsdb db_;
  RouteTable table_;
  sim::TimeUs last_route_change_ = 0;
  std::map<RouterId, Neighbor> neighbors_;
  std::uint32_t next_external_id_ = 1;
  sim::TimerId aging_timer_;
  bool checking_loading_ = false;
  std::array<std::uint64_t, 5> native_tx_{}, native_rx_{}, stream_tx_{}, stream_rx_{};
  std::uint64_t misrouted_ = 0;
  std::uint64_t lsa_transmissions_ = 0;
};

/// Convergence predicate over a set of routers: every adjacency Full, all
/// LSDBs element-wise identical (ages aside), and no retransmission or
/// request list outstanding anywhere.
inline bool converged(const std::vector<OspfRouter*>& routers) {
  if (routers.empty()) return false;
  for (OspfRouter* r : routers)
    if (!r->all_full() || !r->flooding_quiescent()) return false;
  for (std::size_t i = 1; i < routers.size(); ++i)
    if (!routers[i]->lsdb().same_content(routers[0]->lsdb())) return false;
  return true;
}

}  // namespace roq::ospf
