#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "roq/bytes.hpp"
#include "roq/errors.hpp"
#include "roq/log.hpp"
#include "roq/rng.hpp"

namespace roq::sim {

/// Virtual time in integer microseconds. There is no wall clock anywhere
/// in the simulation; determinism comes first.
using TimeUs = std::int64_t;
using NodeId = std::uint32_t;
using LinkId = std::uint32_t;

constexpr TimeUs kMicrosPerMilli = 1000;
constexpr TimeUs kMicrosPerSecond = 1'000'000;

constexpr NodeId kInvalidNode = 0xFFFFFFFF;

/// Point-to-point link. Delay and loss apply symmetrically to both
/// directions; datagrams above the MTU are rejected, which is what forces
/// transports to segment.
struct LinkSpec {
  NodeId a = 0;
  NodeId b = 0;
  TimeUs one_way_delay_us = 10 * kMicrosPerMilli;
  double loss_rate = 0.0;
  std::size_t mtu = 1500;
};

struct TimerId {
  std::uint64_t value = 0;
  bool valid() const { return value != 0; }
};

struct InstrumentRecord {
  TimeUs t_us;
  NodeId node;
  std::string category;
  std::string key;
  std::string value;
};

enum class StopReason { PredicateHolds, QueueExhausted, TimeCap };

struct StopResult {
  TimeUs at = 0;
  StopReason reason = StopReason::QueueExhausted;
};

inline const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::PredicateHolds: return "PredicateHolds";
    case StopReason::QueueExhausted: return "QueueExhausted";
    case StopReason::TimeCap: return "TimeCap";
  }
  return "?";
}

/// Deterministic single-threaded discrete-event fabric: nodes, symmetric
/// point-to-point links with fixed delay and i.i.d. Bernoulli loss, timers,
/// and an append-only instrumentation stream. Events execute in (time, seq)
/// order; the seq tie-break makes same-instant ordering reproducible.
class Simulator {
 public:
  using DatagramHandler = std::function<void(LinkId, NodeId from, const Bytes&)>;

  explicit Simulator(std::uint64_t seed) : rng_(seed), seed_(seed) {}

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  // --- topology -----------------------------------------------------------

  NodeId add_node(const std::string& name) {
    for (const auto& n : node_names_)
      if (n == name) fail(Errc::DuplicateNode, "node '" + name + "' already exists");
    node_names_.push_back(name);
    handlers_.emplace_back();
    return static_cast<NodeId>(node_names_.size() - 1);
  }

  LinkId add_link(const LinkSpec& spec) {
    if (spec.a >= node_names_.size() || spec.b >= node_names_.size())
      fail(Errc::UnknownEndpoint, "link endpoint does not exist");
    if (spec.a == spec.b) fail(Errc::InvalidValue, "self link");
    if (spec.one_way_delay_us <= 0) fail(Errc::InvalidValue, "one_way_delay must be > 0");
    if (spec.loss_rate < 0.0 || spec.loss_rate > 1.0)
      fail(Errc::InvalidValue, "loss_rate outside [0,1]");
    auto key = ordered(spec.a, spec.b);
    if (link_index_.count(key))
      fail(Errc::DuplicateLink, "duplicate link between " + node_names_[spec.a] + " and " +
                                    node_names_[spec.b]);
    links_.push_back(spec);
    LinkId id = static_cast<LinkId>(links_.size() - 1);
    link_index_[key] = id;
    return id;
  }

  std::size_t node_count() const { return node_names_.size(); }
  const std::string& node_name(NodeId n) const { return node_names_.at(n); }
  const LinkSpec& link(LinkId l) const { return links_.at(l); }

  /// Direct link between two nodes; netsim does no multi-hop forwarding.
  LinkId link_between(NodeId a, NodeId b) const {
    auto it = link_index_.find(ordered(a, b));
    if (it == link_index_.end())
      fail(Errc::UnknownEndpoint,
           "no link between " + node_names_.at(a) + " and " + node_names_.at(b));
    return it->second;
  }

  bool has_link_between(NodeId a, NodeId b) const {
    return link_index_.count(ordered(a, b)) != 0;
  }

  /// Loss may be changed mid-run to model failures and partitions.
  void set_link_loss(LinkId l, double loss) {
    if (loss < 0.0 || loss > 1.0) fail(Errc::InvalidValue, "loss_rate outside [0,1]");
    links_.at(l).loss_rate = loss;
  }

  void set_datagram_handler(NodeId n, DatagramHandler h) { handlers_.at(n) = std::move(h); }

  // --- datagrams ----------------------------------------------------------

  void send_datagram(NodeId from, LinkId link_id, Bytes payload) {
    const LinkSpec& l = links_.at(link_id);
    if (from != l.a && from != l.b) fail(Errc::UnknownEndpoint, "sender not on link");
    if (payload.size() > l.mtu)
      fail(Errc::MtuExceeded, "datagram of " + std::to_string(payload.size()) +
                                  " bytes exceeds link mtu " + std::to_string(l.mtu));
    if (l.loss_rate > 0.0 && rng_.chance(l.loss_rate)) {
      ++dropped_datagrams_;
      log(LogLevel::Trace, "drop on link %u at t=%lld", link_id,
          static_cast<long long>(now_));
      return;
    }
    NodeId dst = (from == l.a) ? l.b : l.a;
    schedule(now_ + l.one_way_delay_us,
             [this, link_id, from, dst, p = std::move(payload)]() {
               if (handlers_[dst]) handlers_[dst](link_id, from, p);
             });
  }

  // --- timers -------------------------------------------------------------

  TimerId set_timer(NodeId owner, std::uint64_t tag, TimeUs at, std::function<void()> fn) {
    if (at < now_) fail(Errc::PastDeadline, "timer deadline in the past");
    TimerId id{next_timer_id_++};
    live_timers_.insert(id.value);
    schedule(at, [this, id, owner, tag, f = std::move(fn)]() {
      auto it = live_timers_.find(id.value);
      if (it == live_timers_.end()) return;  // cancelled
      live_timers_.erase(it);
      (void)owner;
      (void)tag;
      if (f) f();
    });
    return id;
  }

  /// Idempotent; cancelling an already-fired or unknown timer is a no-op.
  void cancel_timer(TimerId id) { live_timers_.erase(id.value); }

  // --- execution ----------------------------------------------------------

  TimeUs now() const { return now_; }

  /// Runs events in order until `pred` holds (checked after each event),
  /// the queue empties, or virtual time would pass `time_cap_us`.
  StopResult run_until(const std::function<bool()>& pred, TimeUs time_cap_us) {
    if (pred && pred()) return {now_, StopReason::PredicateHolds};
    while (!queue_.empty()) {
      const Event& top = queue_.top();
      if (top.at > time_cap_us) {
        now_ = time_cap_us;
        return {now_, StopReason::TimeCap};
      }
      auto fn = top.fn;
      now_ = top.at;
      queue_.pop();
      (*fn)();
      if (pred && pred()) return {now_, StopReason::PredicateHolds};
    }
    return {now_, StopReason::QueueExhausted};
  }

  StopResult run_to_quiescence(TimeUs time_cap_us) {
    return run_until(nullptr, time_cap_us);
  }

  // --- instrumentation ----------------------------------------------------

  void instrument(NodeId node, std::string category, std::string key, std::string value) {
    records_.push_back({now_, node, std::move(category), std::move(key), std::move(value)});
  }

  const std::vector<InstrumentRecord>& instrumentation() const { return records_; }

  std::string instrumentation_csv() const {
    std::ostringstream os;
    os << "t_us,node,category,key,value\n";
    for (const auto& r : records_)
      os << r.t_us << ',' << node_names_.at(r.node) << ',' << r.category << ',' << r.key
         << ',' << r.value << '\n';
    return os.str();
  }

  std::uint64_t dropped_datagrams() const { return dropped_datagrams_; }
  std::uint64_t seed() const { return seed_; }
  SplitMix64& rng() { return rng_; }

 private:
  struct Event {
    TimeUs at;
    std::uint64_t seq;
    // Shared so the priority queue's const top() can hand the callable out
    // before pop() destroys the node.
    std::shared_ptr<std::function<void()>> fn;
  };
  struct EventOrder {
    bool operator()(const Event& x, const Event& y) const {
      if (x.at != y.at) return x.at > y.at;
      return x.seq > y.seq;
    }
  };

  static std::pair<NodeId, NodeId> ordered(NodeId a, NodeId b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
  }

  void schedule(TimeUs at, std::function<void()> fn) {
    queue_.push(Event{at, next_seq_++,
                      std::make_shared<std::function<void()>>(std::move(fn))});
  }

  SplitMix64 rng_;
  std::uint64_t seed_;
  TimeUs now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_timer_id_ = 1;
  std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
  std::set<std::uint64_t> live_timers_;
  std::vector<std::string> node_names_;
  std::vector<DatagramHandler> handlers_;
  std::vector<LinkSpec> links_;
  std::map<std::pair<NodeId, NodeId>, LinkId> link_index_;
  std::vector<InstrumentRecord> records_;
  std::uint64_t dropped_datagrams_ = 0;
};

}  // namespace roq::sim
