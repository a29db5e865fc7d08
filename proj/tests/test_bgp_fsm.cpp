#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "roq/bgp/fsm.hpp"

using namespace roq;
using namespace roq::bgp;

namespace {

SessionCore core(Phase p, Role r = Role::Dialer, std::uint16_t hold = 180,
                 std::uint16_t negotiated = 0) {
  SessionCore s;
  s.phase = p;
  s.role = r;
  s.local_as = 64500;
  s.peer_as = 65001;
  s.local_hold_s = hold;
  s.negotiated_hold_s = negotiated;
  return s;
}

template <typename A>
bool has_action(const FsmStep& r) {
  for (const auto& a : r.actions)
    if (std::holds_alternative<A>(a)) return true;
  return false;
}

template <typename A>
const A* get_action(const FsmStep& r) {
  for (const auto& a : r.actions)
    if (const A* p = std::get_if<A>(&a)) return p;
  return nullptr;
}

OpenMsg open_with_hold(std::uint16_t hold) {
  OpenMsg m;
  m.my_as = 65001;
  m.hold_time_s = hold;
  m.bgp_id = 0x0A000002;
  return m;
}

}  // namespace

TEST_CASE("ManualStart: dialer dials, listener goes passive") {
  auto r = fsm_step(core(Phase::Idle, Role::Dialer), EvManualStart{});
  CHECK(r.next.phase == Phase::Connect);
  CHECK(has_action<ActDialTransport>(r));
  REQUIRE(r.actions.size() == 1);

  auto l = fsm_step(core(Phase::Idle, Role::Listener), EvManualStart{});
  CHECK(l.next.phase == Phase::Active);
  CHECK(l.actions.empty());
}

TEST_CASE("transport establishment sends Open from Connect and Active") {
  for (Phase p : {Phase::Connect, Phase::Active}) {
    auto r = fsm_step(core(p), EvTransportEstablished{});
    CHECK(r.next.phase == Phase::OpenSent);
    CHECK(has_action<ActSendOpen>(r));
    CHECK(has_action<ActSetHoldTimer>(r));
  }
}

TEST_CASE("OpenSent + Open negotiates min hold and keepalive = hold/3") {
  auto r = fsm_step(core(Phase::OpenSent, Role::Dialer, 180), EvOpenReceived{open_with_hold(90)});
  CHECK(r.next.phase == Phase::OpenConfirm);
  CHECK(r.next.negotiated_hold_s == 90);
  CHECK(has_action<ActSendKeepalive>(r));
  const auto* ht = get_action<ActSetHoldTimer>(r);
  REQUIRE(ht != nullptr);
  CHECK(ht->seconds == 90);
  const auto* kt = get_action<ActSetKeepaliveTimer>(r);
  REQUIRE(kt != nullptr);
  CHECK(kt->seconds == 30);
}

TEST_CASE("keepalive interval floors at one second") {
  CHECK(keepalive_interval_s(90) == 30);
  CHECK(keepalive_interval_s(4) == 1);   // 4/3 floors to 1
  CHECK(keepalive_interval_s(2) == 1);   // never 0 while hold > 0
  CHECK(keepalive_interval_s(0) == 0);
  CHECK(keepalive_interval_s(100) == 33);
}

TEST_CASE("hold time zero disables both timers") {
  auto r = fsm_step(core(Phase::OpenSent, Role::Dialer, 0), EvOpenReceived{open_with_hold(90)});
  CHECK(r.next.phase == Phase::OpenConfirm);
  CHECK(r.next.negotiated_hold_s == 0);
  CHECK_FALSE(has_action<ActSetHoldTimer>(r));
  CHECK_FALSE(has_action<ActSetKeepaliveTimer>(r));
}

TEST_CASE("bad peer AS and bad version are Open errors") {
  OpenMsg wrong_as = open_with_hold(90);
  wrong_as.my_as = 66666;
  auto r = fsm_step(core(Phase::OpenSent), EvOpenReceived{wrong_as});
  CHECK(r.next.phase == Phase::Idle);
  const auto* n = get_action<ActSendNotification>(r);
  REQUIRE(n != nullptr);
  CHECK(n->code == notif::kOpenError);
  CHECK(n->subcode == notif::kSubBadPeerAs);
  CHECK(has_action<ActCloseTransport>(r));
}

TEST_CASE("OpenConfirm + Keepalive establishes") {
  auto r = fsm_step(core(Phase::OpenConfirm, Role::Dialer, 180, 90), EvKeepaliveReceived{});
  CHECK(r.next.phase == Phase::Established);
  const auto* ht = get_action<ActSetHoldTimer>(r);
  REQUIRE(ht != nullptr);
  CHECK(ht->seconds == 90);
}

TEST_CASE("hold expiry sends Notification(4,0) and closes, from every armed state") {
  for (Phase p : {Phase::OpenSent, Phase::OpenConfirm, Phase::Established}) {
    auto r = fsm_step(core(p, Role::Dialer, 180, 90), EvHoldTimerExpired{});
    CHECK(r.next.phase == Phase::Idle);
    const auto* n = get_action<ActSendNotification>(r);
    REQUIRE(n != nullptr);
    CHECK(n->code == notif::kHoldTimerExpired);
    CHECK(n->subcode == 0);
    CHECK(has_action<ActCloseTransport>(r));
    CHECK(r.next.negotiated_hold_s == 0);
  }
}

TEST_CASE("updates process only in Established; elsewhere they are FSM errors") {
  UpdateMsg u;
  auto ok = fsm_step(core(Phase::Established, Role::Dialer, 180, 90), EvUpdateReceived{u});
  CHECK(ok.next.phase == Phase::Established);
  CHECK(has_action<ActProcessUpdate>(ok));
  CHECK(has_action<ActSetHoldTimer>(ok));  // hold timer reset on traffic

  auto bad = fsm_step(core(Phase::OpenSent), EvUpdateReceived{u});
  CHECK(bad.next.phase == Phase::Idle);
  const auto* n = get_action<ActSendNotification>(bad);
  REQUIRE(n != nullptr);
  CHECK(n->code == notif::kFsmError);
}

TEST_CASE("keepalive timer expiry re-arms and sends in OpenConfirm and Established") {
  for (Phase p : {Phase::OpenConfirm, Phase::Established}) {
    auto r = fsm_step(core(p, Role::Dialer, 180, 90), EvKeepaliveTimerExpired{});
    CHECK(r.next.phase == p);
    CHECK(has_action<ActSendKeepalive>(r));
    const auto* kt = get_action<ActSetKeepaliveTimer>(r);
    REQUIRE(kt != nullptr);
    CHECK(kt->seconds == 30);
  }
}

TEST_CASE("FSM safety: Notification or TransportFailed lands in Idle from any state") {
  for (Phase p : {Phase::Idle, Phase::Connect, Phase::Active, Phase::OpenSent,
                  Phase::OpenConfirm, Phase::Established}) {
    auto r1 = fsm_step(core(p, Role::Dialer, 180, 90),
                       EvNotificationReceived{NotificationMsg{6, 0, {}}});
    CHECK(r1.next.phase == Phase::Idle);
    CHECK(r1.next.negotiated_hold_s == 0);
    CHECK_FALSE(has_action<ActSetHoldTimer>(r1));

    auto r2 = fsm_step(core(p, Role::Dialer, 180, 90), EvTransportFailed{});
    CHECK(r2.next.phase == Phase::Idle);
    CHECK_FALSE(has_action<ActSetHoldTimer>(r2));
  }
}

TEST_CASE("irrelevant events in Idle do nothing") {
  for (const FsmEvent& e :
       {FsmEvent{EvKeepaliveReceived{}}, FsmEvent{EvHoldTimerExpired{}},
        FsmEvent{EvTransportEstablished{}}, FsmEvent{EvUpdateReceived{UpdateMsg{}}}}) {
    auto r = fsm_step(core(Phase::Idle), e);
    CHECK(r.next.phase == Phase::Idle);
    CHECK(r.actions.empty());
  }
}

TEST_CASE("Open received in Established is an FSM error") {
  auto r = fsm_step(core(Phase::Established, Role::Dialer, 180, 90),
                    EvOpenReceived{open_with_hold(90)});
  CHECK(r.next.phase == Phase::Idle);
  CHECK(has_action<ActSendNotification>(r));
}
