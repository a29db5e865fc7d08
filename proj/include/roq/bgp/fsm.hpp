#pragma once

#include <algorithm>
#include <cstdint>
#include <variant>
#include <vector>

#include "roq/bgp/message.hpp"

namespace roq::bgp {

enum class Phase : std::uint8_t { Idle, Connect, Active, OpenSent, OpenConfirm, Established };

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Idle: return "Idle";
    case Phase::Connect: return "Connect";
    case Phase::Active: return "Active";
    case Phase::OpenSent: return "OpenSent";
    case Phase::OpenConfirm: return "OpenConfirm";
    case Phase::Established: return "Established";
  }
  return "?";
}

/// The peer with the numerically lower BGP identifier dials; the other
/// listens. Fixed at configuration time, which sidesteps RFC 4271's
/// connection-collision machinery entirely.
enum class Role : std::uint8_t { Dialer, Listener };

/// The pure-FSM slice of session state. Timer deadlines live in the
/// driver; the FSM only emits Set*Timer actions.
struct SessionCore {
  Phase phase = Phase::Idle;
  Role role = Role::Dialer;
  std::uint32_t local_as = 0;
  std::uint32_t peer_as = 0;
  std::uint16_t local_hold_s = 90;
  std::uint16_t negotiated_hold_s = 0;
};

// Events.
struct EvManualStart {};
struct EvTransportEstablished {};
struct EvTransportFailed {};
struct EvOpenReceived { OpenMsg open; };
struct EvKeepaliveReceived {};
struct EvUpdateReceived { UpdateMsg update; };
struct EvNotificationReceived { NotificationMsg notification; };
struct EvHoldTimerExpired {};
struct EvKeepaliveTimerExpired {};

using FsmEvent = std::variant<EvManualStart, EvTransportEstablished, EvTransportFailed,
                              EvOpenReceived, EvKeepaliveReceived, EvUpdateReceived,
                              EvNotificationReceived, EvHoldTimerExpired,
                              EvKeepaliveTimerExpired>;

// Actions, executed by the session driver in order.
struct ActDialTransport {};
struct ActSendOpen {};
struct ActSendKeepalive {};
struct ActSendNotification { std::uint8_t code = 0; std::uint8_t subcode = 0; };
struct ActProcessUpdate { UpdateMsg update; };
struct ActCloseTransport {};
struct ActSetHoldTimer { std::uint16_t seconds = 0; };
struct ActSetKeepaliveTimer { std::uint16_t seconds = 0; };

using FsmAction = std::variant<ActDialTransport, ActSendOpen, ActSendKeepalive,
                               ActSendNotification, ActProcessUpdate, ActCloseTransport,
                               ActSetHoldTimer, ActSetKeepaliveTimer>;

struct FsmStep {
  SessionCore next;
  std::vector<FsmAction> actions;
};

/// hold/3 with integer floor, but never below one second while keepalives
/// are enabled at all.
inline std::uint16_t keepalive_interval_s(std::uint16_t hold_s) {
  if (hold_s == 0) return 0;
  return std::max<std::uint16_t>(1, static_cast<std::uint16_t>(hold_s / 3));
}

/// Deterministic transition function. Any protocol violation lands in Idle
/// with a Notification; NotificationReceived and TransportFailed land in
/// Idle from every state (the driver cancels timers on Idle entry).
inline FsmStep fsm_step(const SessionCore& s, const FsmEvent& e) {
  SessionCore n = s;
  std::vector<FsmAction> acts;

  auto to_idle = [&]() {
    n.phase = Phase::Idle;
    n.negotiated_hold_s = 0;
  };
  auto violation = [&](std::uint8_t code, std::uint8_t subcode) {
    to_idle();
    acts.push_back(ActSendNotification{code, subcode});
    acts.push_back(ActCloseTransport{});
  };

  if (std::holds_alternative<EvTransportFailed>(e) ||
      std::holds_alternative<EvNotificationReceived>(e)) {
    bool was_idle = s.phase == Phase::Idle;
    to_idle();
    if (!was_idle) acts.push_back(ActCloseTransport{});
    return {n, acts};
  }

  switch (s.phase) {
    case Phase::Idle:
      if (std::holds_alternative<EvManualStart>(e)) {
        if (s.role == Role::Dialer) {
          n.phase = Phase::Connect;
          acts.push_back(ActDialTransport{});
        } else {
          n.phase = Phase::Active;  // passive open: wait for the dialer
        }
      }
      break;

    case Phase::Connect:
    case Phase::Active:
      if (std::holds_alternative<EvTransportEstablished>(e)) {
        n.phase = Phase::OpenSent;
        acts.push_back(ActSendOpen{});
        acts.push_back(ActSetHoldTimer{s.local_hold_s});
      }
      break;

    case Phase::OpenSent:
      if (const auto* open = std::get_if<EvOpenReceived>(&e)) {
        if (open->open.version != 4) {
          violation(notif::kOpenError, notif::kSubUnsupportedVersion);
          break;
        }
        if (s.peer_as != 0 && open->open.my_as != s.peer_as) {
          violation(notif::kOpenError, notif::kSubBadPeerAs);
          break;
        }
        n.phase = Phase::OpenConfirm;
        n.negotiated_hold_s = std::min(s.local_hold_s, open->open.hold_time_s);
        acts.push_back(ActSendKeepalive{});
        if (n.negotiated_hold_s > 0) {
          acts.push_back(ActSetHoldTimer{n.negotiated_hold_s});
          acts.push_back(ActSetKeepaliveTimer{keepalive_interval_s(n.negotiated_hold_s)});
        }
      } else if (std::holds_alternative<EvHoldTimerExpired>(e)) {
        violation(notif::kHoldTimerExpired, 0);
      } else if (std::holds_alternative<EvKeepaliveReceived>(e) ||
                 std::holds_alternative<EvUpdateReceived>(e)) {
        violation(notif::kFsmError, 0);
      }
      break;

    case Phase::OpenConfirm:
      if (std::holds_alternative<EvKeepaliveReceived>(e)) {
        n.phase = Phase::Established;
        if (s.negotiated_hold_s > 0) acts.push_back(ActSetHoldTimer{s.negotiated_hold_s});
      } else if (std::holds_alternative<EvHoldTimerExpired>(e)) {
        violation(notif::kHoldTimerExpired, 0);
      } else if (std::holds_alternative<EvKeepaliveTimerExpired>(e)) {
        acts.push_back(ActSendKeepalive{});
        acts.push_back(ActSetKeepaliveTimer{keepalive_interval_s(s.negotiated_hold_s)});
      } else if (std::holds_alternative<EvOpenReceived>(e) ||
                 std::holds_alternative<EvUpdateReceived>(e)) {
        violation(notif::kFsmError, 0);
      }
      break;

    case Phase::Established:
      if (const auto* upd = std::get_if<EvUpdateReceived>(&e)) {
        acts.push_back(ActProcessUpdate{upd->update});
        if (s.negotiated_hold_s > 0) acts.push_back(ActSetHoldTimer{s.negotiated_hold_s});
      } else if (std::holds_alternative<EvKeepaliveReceived>(e)) {
        if (s.negotiated_hold_s > 0) acts.push_back(ActSetHoldTimer{s.negotiated_hold_s});
      } else if (std::holds_alternative<EvHoldTimerExpired>(e)) {
        violation(notif::kHoldTimerExpired, 0);
      } else if (std::holds_alternative<EvKeepaliveTimerExpired>(e)) {
        acts.push_back(ActSendKeepalive{});
        acts.push_back(ActSetKeepaliveTimer{keepalive_interval_s(s.negotiated_hold_s)});
      } else if (std::holds_alternative<EvOpenReceived>(e)) {
        violation(notif::kFsmError, 0);
      }
      break;
  }
  return {n, acts};
}

}  // namespace roq::bgp
