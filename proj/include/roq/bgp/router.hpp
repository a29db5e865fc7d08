#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "roq/bgp/fsm.hpp"
#include "roq/bgp/message.hpp"
#include "roq/bgp/rib.hpp"
#include "roq/netsim.hpp"
#include "roq/transport.hpp"

namespace roq::bgp {

constexpr std::uint16_t kBgpPort = 179;
constexpr const char* kBgpAlpn = "roq-bgp/1";

struct BgpPeerConfig {
  std::string name;
  sim::NodeId node = 0;
  std::uint32_t peer_as = 0;
  std::uint32_t peer_bgp_id = 0;
  transport::TransportKind kind = transport::TransportKind::PlainStream;
  std::uint16_t port = kBgpPort;
};

struct BgpRouterConfig {
  std::string name;
  sim::NodeId node = 0;
  std::uint32_t local_as = 0;
  std::uint32_t bgp_id = 0;
  std::uint16_t hold_time_s = 90;
  /// Re-issue ManualStart one virtual second after an unexpected drop to
  /// Idle. Disabled in FSM trace tests.
  bool auto_restart = true;
  /// Identity and trust for SecureMux sessions (alpn roq-bgp/1).
  std::optional<transport::SecurityConfig> secure;
};

struct RibRoute {
  Prefix prefix;
  std::vector<std::uint32_t> as_path;
};

/// One BGP speaker: sessions (FSM + one stream on one connection each),
/// the RIB triplet, decision process, and export. All messages of a
/// session travel on a single bidirectional stream; the peer with the
/// lower BGP identifier dials.
class BgpRouter {
 public:
  BgpRouter(sim::Simulator& s, transport::TransportSystem& tp, BgpRouterConfig cfg)
      : sim_(s), tp_(tp), cfg_(std::move(cfg)), rib_(cfg_.local_as) {}

  BgpRouter(const BgpRouter&) = delete;
  BgpRouter& operator=(const BgpRouter&) = delete;

  // Measurement taps (harness instrumentation).
  std::function<void(std::uint32_t peer_bgp_id, const Prefix&, bool announce, sim::TimeUs)>
      on_update_received;
  std::function<void(const Prefix&, sim::TimeUs)> on_locrib_change;
  std::function<void(std::uint32_t peer_bgp_id, const Bytes&)> on_message_sent;
  std::function<void(std::uint32_t peer_bgp_id, Phase, sim::TimeUs)> on_phase_change;

  void add_peer(const BgpPeerConfig& pc) {
    if (pc.kind == transport::TransportKind::SecureMux && !cfg_.secure)
      fail(Errc::MissingSecurityConfig, "SecureMux peer on a router with no identity");
    Session s;
    s.cfg = pc;
    s.core.role = cfg_.bgp_id < pc.peer_bgp_id ? Role::Dialer : Role::Listener;
    s.core.local_as = cfg_.local_as;
    s.core.peer_as = pc.peer_as;
    s.core.local_hold_s = cfg_.hold_time_s;
    sessions_.emplace(pc.node, std::move(s));
  }

  /// Binds listeners and manually starts every session.
  void start() {
    for (auto& [node, s] : sessions_) {
      if (s.core.role == Role::Listener) ensure_listener(s.cfg.port, s.cfg.kind);
    }
    for (auto& [node, s] : sessions_) step(s, EvManualStart{});
  }

  /// Injects locally originated routes and exports the resulting delta.
  void originate_many(const std::vector<RibRoute>& routes) {
    RibDelta combined;
    for (const RibRoute& r : routes) {
      PathAttrs a;
      a.origin = Origin::Igp;
      a.as_path = r.as_path;
      a.next_hop = cfg_.bgp_id;
      RibDelta d = rib_.originate(r.prefix, a, sim_.now());
      combined.insert(combined.end(), d.begin(), d.end());
    }
    note_locrib_changes(combined);
    export_to_all(combined);
  }

  void originate(const Prefix& p, std::vector<std::uint32_t> as_path) {
    originate_many({RibRoute{p, std::move(as_path)}});
  }

  const RibSet& rib() const { return rib_; }
  const BgpRouterConfig& config() const { return cfg_; }

  Phase session_phase(sim::NodeId peer_node) const {
    auto it = sessions_.find(peer_node);
    return it == sessions_.end() ? Phase::Idle : it->second.core.phase;
  }

  bool all_established() const {
    for (const auto& [n, s] : sessions_)
      if (s.core.phase != Phase::Established) return false;
    return !sessions_.empty();
  }

  std::uint64_t notifications_sent() const { return notifications_sent_; }
  std::uint64_t notifications_received() const { return notifications_received_; }

  /// Continuous loop-freedom assertion; checked by experiments after every
  /// update and by tests at the end.
  bool loop_free() const { return rib_.loop_free(); }

 private:
  struct Session {
    BgpPeerConfig cfg;
    SessionCore core;
    std::optional<transport::ConnRef> conn;
    std::optional<transport::StreamId> stream;
    Bytes rx;
    sim::TimerId hold_timer;
    sim::TimerId keepalive_timer;
    sim::TimerId restart_timer;
  };

  void ensure_listener(std::uint16_t port, transport::TransportKind kind) {
    auto key = std::make_pair(port, kind);
    if (listeners_.count(key)) return;
    std::optional<transport::SecurityConfig> sec;
    if (kind == transport::TransportKind::SecureMux) sec = cfg_.secure;
    tp_.open_listener({cfg_.node, port}, kind, sec,
                      [this](const transport::TransportEvent& e) { on_transport_event(e); });
    listeners_.insert(key);
  }

  Session* session_for_conn(const transport::ConnRef& ref) {
    for (auto& [node, s] : sessions_)
      if (s.conn && *s.conn == ref) return &s;
    return nullptr;
  }

  void on_transport_event(const transport::TransportEvent& e) {
    using T = transport::TransportEvent;
    if (e.type == T::Type::Accepted) {
      auto info = tp_.connection(e.conn);
      auto it = sessions_.find(info.remote);
      if (it == sessions_.end() || it->second.core.role != Role::Listener) {
        tp_.close(e.conn, 1, "no session configured for this peer");
        return;
      }
      Session& s = it->second;
      std::optional<transport::ConnRef> old = s.conn;
      s.conn = e.conn;
      s.stream.reset();
      s.rx.clear();
      if (old) tp_.close(*old, 0, "superseded by a new inbound connection");
      return;
    }

    Session* sp = session_for_conn(e.conn);
    if (!sp) return;  // stale connection
    Session& s = *sp;
    switch (e.type) {
      case T::Type::Established:
        if (s.cfg.kind == transport::TransportKind::PlainStream ||
            tp_.connection(e.conn).dialer) {
          s.stream = tp_.open_stream(e.conn);
          step(s, EvTransportEstablished{});
        }
        // SecureMux listener side waits for the dialer's stream.
        break;
      case T::Type::StreamOpened:
        if (!s.stream) {
          s.stream = e.stream;
          step(s, EvTransportEstablished{});
        }
        break;
      case T::Type::Data:
        s.rx.insert(s.rx.end(), e.data.begin(), e.data.end());
        drain_rx(s);
        break;
      case T::Type::Closed:
        s.conn.reset();
        s.stream.reset();
        s.rx.clear();
        step(s, EvTransportFailed{});
        break;
      default:
        break;
    }
  }

  void drain_rx(Session& s) {
    while (s.conn && !s.rx.empty()) {
      DecodeResult d = decode_message(ByteView(s.rx.data(), s.rx.size()));
      if (d.status == DecodeStatus::NeedMoreData) return;
      if (d.status != DecodeStatus::Ok) {
        std::uint8_t subcode = d.status == DecodeStatus::BadMarker ? notif::kSubBadMarker
                               : d.status == DecodeStatus::BadLength ? notif::kSubBadLength
                                                                     : notif::kSubBadType;
        send_message(s, NotificationMsg{notif::kMessageHeaderError, subcode, {}});
        drop_transport(s);
        step(s, EvTransportFailed{});
        return;
      }
      s.rx.erase(s.rx.begin(), s.rx.begin() + static_cast<std::ptrdiff_t>(d.consumed));
      dispatch_message(s, d.message);
    }
  }

  void dispatch_message(Session& s, const BgpMessage& m) {
    if (const auto* open = std::get_if<OpenMsg>(&m)) {
      step(s, EvOpenReceived{*open});
    } else if (const auto* upd = std::get_if<UpdateMsg>(&m)) {
      if (on_update_received) {
        for (const Prefix& p : upd->nlri)
          on_update_received(s.cfg.peer_bgp_id, p, true, sim_.now());
        for (const Prefix& p : upd->withdrawn)
          on_update_received(s.cfg.peer_bgp_id, p, false, sim_.now());
      }
      step(s, EvUpdateReceived{*upd});
    } else if (const auto* notif_msg = std::get_if<NotificationMsg>(&m)) {
      ++notifications_received_;
      step(s, EvNotificationReceived{*notif_msg});
    } else {
      step(s, EvKeepaliveReceived{});
    }
  }

  void step(Session& s, const FsmEvent& e) {
    Phase before = s.core.phase;
    FsmStep r = fsm_step(s.core, e);
    s.core = r.next;
    bool poisoned = false;
    for (const FsmAction& a : r.actions) {
      if (!run_action(s, a)) {
        poisoned = true;  // transport torn down mid-action; skip the rest
        break;
      }
    }
    if (s.core.phase != before) {
      if (on_phase_change) on_phase_change(s.cfg.peer_bgp_id, s.core.phase, sim_.now());
      if (s.core.phase == Phase::Established) on_session_up(s);
      if (s.core.phase == Phase::Idle) on_session_down(s, e);
    }
    if (poisoned) step(s, EvTransportFailed{});
  }

  /// Returns false when the action tore the transport down and the FSM
  /// must be failed over to Idle.
  bool run_action(Session& s, const FsmAction& a) {
    if (std::holds_alternative<ActDialTransport>(a)) {
      std::optional<transport::SecurityConfig> sec;
      if (s.cfg.kind == transport::TransportKind::SecureMux) sec = cfg_.secure;
      s.conn = tp_.dial(cfg_.node, {s.cfg.node, s.cfg.port}, s.cfg.kind, sec,
                        [this](const transport::TransportEvent& e) { on_transport_event(e); });
      s.stream.reset();
      s.rx.clear();
    } else if (std::holds_alternative<ActSendOpen>(a)) {
      send_message(s, OpenMsg{4, cfg_.local_as, cfg_.hold_time_s, cfg_.bgp_id});
    } else if (std::holds_alternative<ActSendKeepalive>(a)) {
      send_message(s, KeepaliveMsg{});
    } else if (const auto* sn = std::get_if<ActSendNotification>(&a)) {
      send_message(s, NotificationMsg{sn->code, sn->subcode, {}});
    } else if (const auto* pu = std::get_if<ActProcessUpdate>(&a)) {
      ProcessResult res = rib_.process_update(s.cfg.peer_bgp_id, pu->update, sim_.now());
      if (res.status == UpdateStatus::Malformed) {
        send_message(s, NotificationMsg{notif::kUpdateError, notif::kSubMalformedAttrs, {}});
        drop_transport(s);
        return false;
      }
      note_locrib_changes(res.delta);
      export_to_all(res.delta);
    } else if (std::holds_alternative<ActCloseTransport>(a)) {
      drop_transport(s);
    } else if (const auto* ht = std::get_if<ActSetHoldTimer>(&a)) {
      sim_.cancel_timer(s.hold_timer);
      sim::NodeId peer = s.cfg.node;
      s.hold_timer = sim_.set_timer(cfg_.node, 1,
                                    sim_.now() + ht->seconds * sim::kMicrosPerSecond,
                                    [this, peer] { on_session_timer(peer, true); });
    } else if (const auto* kt = std::get_if<ActSetKeepaliveTimer>(&a)) {
      sim_.cancel_timer(s.keepalive_timer);
      sim::NodeId peer = s.cfg.node;
      s.keepalive_timer = sim_.set_timer(cfg_.node, 2,
                                         sim_.now() + kt->seconds * sim::kMicrosPerSecond,
                                         [this, peer] { on_session_timer(peer, false); });
    }
    return true;
  }

  void on_session_timer(sim::NodeId peer, bool hold) {
    auto it = sessions_.find(peer);
    if (it == sessions_.end()) return;
    if (hold) step(it->second, EvHoldTimerExpired{});
    else step(it->second, EvKeepaliveTimerExpired{});
  }

  void send_message(Session& s, const BgpMessage& m) {
    if (!s.conn || !s.stream) return;
    Bytes wire = encode_message(m);
    if (std::holds_alternative<NotificationMsg>(m)) ++notifications_sent_;
    if (on_message_sent) on_message_sent(s.cfg.peer_bgp_id, wire);
    tp_.stream_send(*s.conn, *s.stream, ByteView(wire.data(), wire.size()));
  }

  void drop_transport(Session& s) {
    if (!s.conn) return;
    transport::ConnRef ref = *s.conn;
    // Clear first: the local Closed event re-enters on_transport_event and
    // must see this connection as stale.
    s.conn.reset();
    s.stream.reset();
    s.rx.clear();
    tp_.close(ref, 0, "session closed");
  }

  void on_session_up(Session& s) {
    // Initial table push: everything currently selected.
    RibDelta all;
    for (const auto& [p, e] : rib_.loc_rib()) all.push_back(p);
    export_to_session(s, all);
  }

  void on_session_down(Session& s, const FsmEvent& cause) {
    sim_.cancel_timer(s.hold_timer);
    sim_.cancel_timer(s.keepalive_timer);
    RibDelta delta = rib_.flush_peer(s.cfg.peer_bgp_id);
    note_locrib_changes(delta);
    export_to_all(delta);
    bool admin = std::holds_alternative<EvManualStart>(cause);
    if (cfg_.auto_restart && !admin) {
      sim_.cancel_timer(s.restart_timer);
      sim::NodeId peer = s.cfg.node;
      s.restart_timer =
          sim_.set_timer(cfg_.node, 3, sim_.now() + sim::kMicrosPerSecond, [this, peer] {
            auto it = sessions_.find(peer);
            if (it != sessions_.end() && it->second.core.phase == Phase::Idle)
              step(it->second, EvManualStart{});
          });
    }
  }

  void note_locrib_changes(const RibDelta& delta) {
    if (!on_locrib_change) return;
    for (const Prefix& p : delta) on_locrib_change(p, sim_.now());
  }

  void export_to_all(const RibDelta& delta) {
    if (delta.empty()) return;
    for (auto& [node, s] : sessions_)
      if (s.core.phase == Phase::Established) export_to_session(s, delta);
  }

  void export_to_session(Session& s, const RibDelta& delta) {
    if (delta.empty()) return;
    std::vector<UpdateMsg> updates =
        rib_.export_updates(delta, s.cfg.peer_bgp_id, s.cfg.peer_as, cfg_.bgp_id);
    for (const UpdateMsg& u : updates) send_message(s, u);
  }

  sim::Simulator& sim_;
  transport::TransportSystem& tp_;
  BgpRouterConfig cfg_;
  RibSet rib_;
  std::map<sim::NodeId, Session> sessions_;  // keyed by peer node
  std::set<std::pair<std::uint16_t, transport::TransportKind>> listeners_;
  std::uint64_t notifications_sent_ = 0;
  std::uint64_t notifications_received_ = 0;
};

}  // namespace roq::bgp
