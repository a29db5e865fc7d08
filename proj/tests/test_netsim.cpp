#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "roq/netsim.hpp"

using namespace roq;
using namespace roq::sim;

namespace {

struct Capture {
  std::vector<std::pair<TimeUs, Bytes>> got;
};

Bytes bytes_of(std::initializer_list<std::uint8_t> v) { return Bytes(v); }

}  // namespace

TEST_CASE("nodes and links reject duplicates and bad parameters") {
  Simulator s(1);
  NodeId a = s.add_node("R1");
  NodeId b = s.add_node("R2");
  CHECK_THROWS_AS(s.add_node("R1"), Error);
  s.add_link({a, b, 10 * kMicrosPerMilli, 0.0, 1500});
  CHECK_THROWS_AS(s.add_link({a, b, 10 * kMicrosPerMilli, 0.0, 1500}), Error);
  CHECK_THROWS_AS(s.add_link({a, 7, 10 * kMicrosPerMilli, 0.0, 1500}), Error);
  CHECK_THROWS_AS(s.add_link({a, b, 0, 0.0, 1500}), Error);  // delay must be positive
  CHECK_THROWS_AS(s.add_link({a, b, 1000, 1.5, 1500}), Error);
}

TEST_CASE("datagram delivery matches the link delay exactly") {
  Simulator s(1);
  NodeId a = s.add_node("a");
  NodeId b = s.add_node("b");
  LinkId l = s.add_link({a, b, 10 * kMicrosPerMilli, 0.0, 1500});
  Capture cap;
  s.set_datagram_handler(b, [&](LinkId, NodeId, const Bytes& d) {
    cap.got.emplace_back(s.now(), d);
  });
  s.send_datagram(a, l, bytes_of({1, 2, 3}));
  auto stop = s.run_to_quiescence(kMicrosPerSecond);
  CHECK(stop.reason == StopReason::QueueExhausted);
  REQUIRE(cap.got.size() == 1);
  CHECK(cap.got[0].first == 10 * kMicrosPerMilli);
  CHECK(cap.got[0].second == bytes_of({1, 2, 3}));
}

TEST_CASE("loss_rate 1 never delivers, loss_rate 0 always does") {
  Simulator s(7);
  NodeId a = s.add_node("a");
  NodeId b = s.add_node("b");
  LinkId l = s.add_link({a, b, 1000, 1.0, 1500});
  int received = 0;
  s.set_datagram_handler(b, [&](LinkId, NodeId, const Bytes&) { ++received; });
  for (int i = 0; i < 50; ++i) s.send_datagram(a, l, bytes_of({9}));
  s.run_to_quiescence(kMicrosPerSecond);
  CHECK(received == 0);
  CHECK(s.dropped_datagrams() == 50);
}

TEST_CASE("seeded loss decisions are reproducible exactly") {
  auto run = [](std::uint64_t seed) {
    Simulator s(seed);
    NodeId a = s.add_node("a");
    NodeId b = s.add_node("b");
    LinkId l = s.add_link({a, b, 1000, 0.1, 1500});
    int received = 0;
    s.set_datagram_handler(b, [&](LinkId, NodeId, const Bytes&) { ++received; });
    for (int i = 0; i < 1000; ++i) s.send_datagram(a, l, bytes_of({1}));
    s.run_to_quiescence(10 * kMicrosPerSecond);
    return std::make_pair(received, s.dropped_datagrams());
  };
  auto r1 = run(42), r2 = run(42);
  CHECK(r1 == r2);
  CHECK(r1.first + static_cast<int>(r1.second) == 1000);
  CHECK(r1.second > 50);   // ~100 expected at 10%
  CHECK(r1.second < 200);
}

TEST_CASE("mtu violations are rejected") {
  Simulator s(1);
  NodeId a = s.add_node("a");
  NodeId b = s.add_node("b");
  LinkId l = s.add_link({a, b, 1000, 0.0, 100});
  CHECK_THROWS_AS(s.send_datagram(a, l, Bytes(101, 0xAA)), Error);
  s.send_datagram(a, l, Bytes(100, 0xAA));  // at the limit is fine
}

TEST_CASE("per-direction FIFO among delivered datagrams") {
  Simulator s(3);
  NodeId a = s.add_node("a");
  NodeId b = s.add_node("b");
  LinkId l = s.add_link({a, b, 5 * kMicrosPerMilli, 0.0, 1500});
  std::vector<std::uint8_t> order;
  s.set_datagram_handler(b, [&](LinkId, NodeId, const Bytes& d) { order.push_back(d[0]); });
  for (std::uint8_t i = 0; i < 10; ++i) s.send_datagram(a, l, bytes_of({i}));
  s.run_to_quiescence(kMicrosPerSecond);
  REQUIRE(order.size() == 10);
  for (std::uint8_t i = 0; i < 10; ++i) CHECK(order[i] == i);
}

TEST_CASE("timers: cancellation, same-instant ordering, past deadlines") {
  Simulator s(1);
  NodeId a = s.add_node("a");

  SUBCASE("cancel before expiry suppresses the callback") {
    bool fired = false;
    TimerId t = s.set_timer(a, 0, 5 * kMicrosPerSecond, [&] { fired = true; });
    s.set_timer(a, 1, 1 * kMicrosPerSecond, [&] { s.cancel_timer(t); });
    s.run_to_quiescence(10 * kMicrosPerSecond);
    CHECK_FALSE(fired);
    s.cancel_timer(t);  // idempotent
  }

  SUBCASE("two timers at the same instant fire in set order") {
    std::vector<int> order;
    s.set_timer(a, 0, 1000, [&] { order.push_back(1); });
    s.set_timer(a, 0, 1000, [&] { order.push_back(2); });
    s.run_to_quiescence(kMicrosPerSecond);
    CHECK(order == std::vector<int>{1, 2});
  }

  SUBCASE("a deadline in the past is refused") {
    s.set_timer(a, 0, 1000, [] {});
    s.run_to_quiescence(kMicrosPerSecond);
    CHECK(s.now() == 1000);
    CHECK_THROWS_AS(s.set_timer(a, 0, 999, [] {}), Error);
  }
}

TEST_CASE("run_until stop reasons") {
  Simulator s(1);
  NodeId a = s.add_node("a");

  SUBCASE("empty queue with false predicate reports QueueExhausted") {
    auto stop = s.run_until([] { return false; }, kMicrosPerSecond);
    CHECK(stop.reason == StopReason::QueueExhausted);
  }

  SUBCASE("time cap is reported at exactly the cap") {
    // A self-rescheduling timer livelocks the queue.
    std::function<void()> tick = [&] {
      s.set_timer(a, 0, s.now() + kMicrosPerSecond, tick);
    };
    s.set_timer(a, 0, kMicrosPerSecond, tick);
    auto stop = s.run_until([] { return false; }, 300 * kMicrosPerSecond);
    CHECK(stop.reason == StopReason::TimeCap);
    CHECK(stop.at == 300 * kMicrosPerSecond);
    CHECK(s.now() == 300 * kMicrosPerSecond);
  }

  SUBCASE("predicate is checked after each event") {
    int count = 0;
    for (int i = 1; i <= 5; ++i)
      s.set_timer(a, 0, i * 1000, [&] { ++count; });
    auto stop = s.run_until([&] { return count == 3; }, kMicrosPerSecond);
    CHECK(stop.reason == StopReason::PredicateHolds);
    CHECK(stop.at == 3000);
    CHECK(count == 3);
  }
}

TEST_CASE("instrumentation stream serializes as CSV and is deterministic") {
  auto run = [] {
    Simulator s(99);
    NodeId a = s.add_node("a");
    NodeId b = s.add_node("b");
    LinkId l = s.add_link({a, b, 2000, 0.05, 1500});
    s.set_datagram_handler(b, [&](LinkId, NodeId, const Bytes& d) {
      s.instrument(b, "rx", "len", std::to_string(d.size()));
    });
    for (int i = 0; i < 100; ++i) s.send_datagram(a, l, Bytes(static_cast<size_t>(i % 7 + 1), 0));
    s.run_to_quiescence(kMicrosPerSecond);
    return s.instrumentation_csv();
  };
  std::string first = run(), second = run();
  CHECK(first == second);
  CHECK(first.rfind("t_us,node,category,key,value\n", 0) == 0);
}
