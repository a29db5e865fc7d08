#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "roq/ospf/lsdb.hpp"
#include "roq/ospf/packet.hpp"

namespace roq::ospf {

enum class NbrPhase : std::uint8_t { Down, Init, TwoWay, ExStart, Exchange, Loading, Full };

inline const char* nbr_phase_name(NbrPhase p) {
  switch (p) {
    case NbrPhase::Down: return "Down";
    case NbrPhase::Init: return "Init";
    case NbrPhase::TwoWay: return "2-Way";
    case NbrPhase::ExStart: return "ExStart";
    case NbrPhase::Exchange: return "Exchange";
    case NbrPhase::Loading: return "Loading";
    case NbrPhase::Full: return "Full";
  }
  return "?";
}

/// Native: the classic datagram path carries everything. OverQuic: reaching
/// 2-Way establishes a SecureMux connection and every later packet rides
/// its stream; Hellos stay on the datagram path for liveness.
enum class OspfMode : std::uint8_t { Native, OverQuic };

constexpr int kMaxQuicRetries = 5;

struct NeighborCore {
  RouterId self = 0;
  RouterId peer = 0;
  NbrPhase phase = NbrPhase::Down;
  OspfMode mode = OspfMode::Native;
  int quic_retries = 0;
  std::uint32_t dd_seq = 0;    // master: sequence it owns
  std::uint32_t echo_seq = 0;  // slave: last master sequence echoed

  /// Higher router id is Master and owns the DBD sequence; the same side
  /// dials the QUIC connection.
  bool is_master() const { return self > peer; }
};

// Events.
struct EvHelloReceived { bool lists_me = false; };
struct EvDead {};
struct EvQuicEstablished {};
struct EvQuicFailed {};
struct EvDbdReceived { DbDescriptionPacket dbd; };
struct EvLsRequestReceived { LsRequestPacket request; };
struct EvLsUpdateReceived { LsUpdatePacket update; };
struct EvLsAckReceived { LsAckPacket ack; };
struct EvRxmtTimerExpired {};

using NbrEvent = std::variant<EvHelloReceived, EvDead, EvQuicEstablished, EvQuicFailed,
                              EvDbdReceived, EvLsRequestReceived, EvLsUpdateReceived,
                              EvLsAckReceived, EvRxmtTimerExpired>;

// Actions.
struct ActEstablishQuic {};
struct ActSendDbd { DbDescriptionPacket dbd; };
struct ActSendLsRequest { std::vector<LsaKey> keys; };        // also becomes the request list
struct ActSendRequestedLsas { std::vector<LsaKey> keys; };    // answer a peer's LSR
struct ActSetQuicRetryTimer {};
struct ActFlushAdjacency {};
struct ActRegenerateRouterLsa {};
struct ActCloseQuic {};
struct ActResendRetrans {};

using NbrAction = std::variant<ActEstablishQuic, ActSendDbd, ActSendLsRequest,
                               ActSendRequestedLsas, ActSetQuicRetryTimer, ActFlushAdjacency,
                               ActRegenerateRouterLsa, ActCloseQuic, ActResendRetrans>;

struct NbrStep {
  NeighborCore next;
  std::vector<NbrAction> actions;
};

namespace detail {

inline std::vector<LsaKey> request_keys(const Lsdb& db,
                                        const std::vector<LsaHeader>& peer_headers) {
  std::vector<LsaKey> out;
  for (const LsaHeader& h : peer_headers) {
    const Lsa* stored = db.find(h.key);
    if (!stored || lsdb_compare(h, header_of(*stored)) == CompareResult::ANewer)
      out.push_back(h.key);
  }
  return out;
}

inline DbDescriptionPacket master_init_dbd(std::uint32_t seq) {
  DbDescriptionPacket d;
  d.dd_seq = seq;
  d.flags = {true, true, true};  // Init | More | Master
  return d;
}

inline DbDescriptionPacket slave_restart_dbd() {
  DbDescriptionPacket d;
  d.dd_seq = 0;
  d.flags = {true, true, false};
  return d;
}

}  // namespace detail

/// Deterministic neighbor transition function. The LSDB is read-only
/// context: it supplies our header list for DBDs and the outstanding
/// request set that gates Loading -> Full. A driver installs LsUpdate
/// contents (and prunes request lists) before stepping the FSM.
inline NbrStep neighbor_fsm_step(const NeighborCore& s, const NbrEvent& e, const Lsdb& db) {
  NeighborCore n = s;
  std::vector<NbrAction> acts;

  auto teardown = [&](bool close_quic) {
    acts.push_back(ActFlushAdjacency{});
    if (s.phase == NbrPhase::Full) acts.push_back(ActRegenerateRouterLsa{});
    if (close_quic && s.mode == OspfMode::OverQuic && s.phase >= NbrPhase::TwoWay)
      acts.push_back(ActCloseQuic{});
  };

  auto enter_exstart = [&]() {
    n.phase = NbrPhase::ExStart;
    n.dd_seq = s.dd_seq + 1;
    n.echo_seq = 0;
    if (n.is_master()) acts.push_back(ActSendDbd{detail::master_init_dbd(n.dd_seq)});
  };

  auto promote = [&]() {  // Init/Down -> bidirectional visibility confirmed
    if (s.mode == OspfMode::OverQuic) {
      n.phase = NbrPhase::TwoWay;
      acts.push_back(ActEstablishQuic{});
    } else {
      enter_exstart();
    }
  };

  auto evaluate_requests = [&](const std::vector<LsaHeader>& peer_headers) {
    std::vector<LsaKey> reqs = detail::request_keys(db, peer_headers);
    if (reqs.empty()) {
      n.phase = NbrPhase::Full;
      acts.push_back(ActRegenerateRouterLsa{});
    } else {
      n.phase = NbrPhase::Loading;
      acts.push_back(ActSendLsRequest{std::move(reqs)});
    }
  };

  if (std::holds_alternative<EvDead>(e)) {
    if (s.phase != NbrPhase::Down) {
      n.phase = NbrPhase::Down;
      n.quic_retries = 0;
      teardown(true);
    }
    return {n, acts};
  }

  if (const auto* hello = std::get_if<EvHelloReceived>(&e)) {
    if (s.phase == NbrPhase::Down) {
      if (hello->lists_me) promote();
      else n.phase = NbrPhase::Init;
    } else if (s.phase == NbrPhase::Init) {
      if (hello->lists_me) promote();
    } else if (!hello->lists_me) {
      // Peer no longer sees us; the adjacency is void.
      n.phase = NbrPhase::Init;
      teardown(true);
    }
    return {n, acts};
  }

  if (std::holds_alternative<EvQuicEstablished>(e)) {
    if (s.phase == NbrPhase::TwoWay) enter_exstart();
    return {n, acts};
  }
  if (std::holds_alternative<EvQuicFailed>(e)) {
    if (s.phase >= NbrPhase::TwoWay) {
      if (s.quic_retries >= kMaxQuicRetries) {
        n.phase = NbrPhase::Down;
        n.quic_retries = 0;
        teardown(false);
      } else {
        n.phase = NbrPhase::Init;
        ++n.quic_retries;
        teardown(false);
        acts.push_back(ActSetQuicRetryTimer{});
      }
    }
    return {n, acts};
  }

  if (const auto* dbd = std::get_if<EvDbdReceived>(&e)) {
    const DbDescriptionPacket& p = dbd->dbd;
    if (s.phase < NbrPhase::ExStart) return {n, acts};
    if (!s.is_master()) {
      if (p.flags.master && p.flags.init) {
        // Master's opening DBD (fresh or re-sent): echo the sequence with
        // our full header list. Covers both first contact and the master
        // restarting the exchange after a mismatch.
        n.phase = NbrPhase::Exchange;
        n.echo_seq = p.dd_seq;
        DbDescriptionPacket reply;
        reply.dd_seq = p.dd_seq;
        reply.headers = db.headers();
        acts.push_back(ActSendDbd{reply});
      } else if (p.flags.master && !p.flags.init && s.phase == NbrPhase::Exchange &&
                 p.dd_seq == s.echo_seq + 1) {
        evaluate_requests(p.headers);
      }
    } else {
      if (p.flags.init && !p.flags.master) {
        // Slave asks to (re)start the exchange.
        enter_exstart();
      } else if (!p.flags.master && s.phase == NbrPhase::ExStart && p.dd_seq == s.dd_seq) {
        // Slave's echo with its headers: reply with ours, then fetch.
        n.dd_seq = s.dd_seq + 1;
        DbDescriptionPacket reply;
        reply.dd_seq = n.dd_seq;
        reply.flags = {false, false, true};
        reply.headers = db.headers();
        acts.push_back(ActSendDbd{reply});
        evaluate_requests(p.headers);
      } else if (!p.flags.master && s.phase > NbrPhase::ExStart &&
                 p.dd_seq + 1 == s.dd_seq) {
        // Duplicate slave echo: our header reply was lost, send it again.
        DbDescriptionPacket reply;
        reply.dd_seq = s.dd_seq;
        reply.flags = {false, false, true};
        reply.headers = db.headers();
        acts.push_back(ActSendDbd{reply});
      }
    }
    return {n, acts};
  }

  if (const auto* lsr = std::get_if<EvLsRequestReceived>(&e)) {
    if (s.phase >= NbrPhase::Exchange)
      acts.push_back(ActSendRequestedLsas{lsr->request.keys});
    return {n, acts};
  }

  if (std::holds_alternative<EvLsUpdateReceived>(e)) {
    if (s.phase == NbrPhase::Loading && db.requests_empty(s.peer)) {
      n.phase = NbrPhase::Full;
      acts.push_back(ActRegenerateRouterLsa{});
    }
    return {n, acts};
  }

  if (std::holds_alternative<EvLsAckReceived>(e)) {
    return {n, acts};  // retransmission lists are pruned by the driver
  }

  if (std::holds_alternative<EvRxmtTimerExpired>(e)) {
    switch (s.phase) {
      case NbrPhase::Init:
        if (s.mode == OspfMode::OverQuic && s.quic_retries > 0) {
          n.phase = NbrPhase::TwoWay;
          acts.push_back(ActEstablishQuic{});
        }
        break;
      case NbrPhase::ExStart:
        if (s.is_master()) acts.push_back(ActSendDbd{detail::master_init_dbd(s.dd_seq)});
        else acts.push_back(ActSendDbd{detail::slave_restart_dbd()});
        break;
      case NbrPhase::Exchange: {
        DbDescriptionPacket reply;  // re-echo; the master answers duplicates
        reply.dd_seq = s.echo_seq;
        reply.headers = db.headers();
        acts.push_back(ActSendDbd{reply});
        break;
      }
      case NbrPhase::Loading: {
        const std::set<LsaKey>* reqs = db.requests_of(s.peer);
        if (reqs && !reqs->empty())
          acts.push_back(ActSendLsRequest{std::vector<LsaKey>(reqs->begin(), reqs->end())});
        break;
      }
      case NbrPhase::Full: {
        const std::map<LsaKey, Lsa>* rt = db.retrans_of(s.peer);
        if (rt && !rt->empty()) acts.push_back(ActResendRetrans{});
        break;
      }
      default:
        break;
    }
    return {n, acts};
  }

  return {n, acts};
}

}  // namespace roq::ospf
