#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "roq/bgp/message.hpp"
#include "roq/netsim.hpp"
#include "roq/prefix.hpp"

namespace roq::bgp {

/// Routes originated locally (injected) are keyed under this peer id,
/// which also makes them win the lowest-peer tie-break.
constexpr std::uint32_t kLocalPeer = 0;

struct RibEntry {
  Prefix prefix;
  PathAttrs attrs;
  std::uint32_t learned_from = kLocalPeer;  // peer bgp id
  sim::TimeUs t_received = 0;

  bool same_route(const RibEntry& o) const {
    return prefix == o.prefix && attrs == o.attrs && learned_from == o.learned_from;
  }
};

/// Prefixes whose Loc-RIB best route changed. Ordered for determinism.
using RibDelta = std::vector<Prefix>;

/// Shortest AS path wins; ties go to the lowest peer id. Total order, so
/// the choice is deterministic for any candidate set.
inline const RibEntry* decide(const std::vector<const RibEntry*>& candidates) {
  const RibEntry* best = nullptr;
  for (const RibEntry* c : candidates) {
    if (!best || c->attrs.as_path.size() < best->attrs.as_path.size() ||
        (c->attrs.as_path.size() == best->attrs.as_path.size() &&
         c->learned_from < best->learned_from))
      best = c;
  }
  return best;
}

enum class UpdateStatus { Ok, Malformed };

struct ProcessResult {
  UpdateStatus status = UpdateStatus::Ok;
  RibDelta delta;
};

/// Adj-RIB-In (per peer), Loc-RIB, and Adj-RIB-Out (a record of what was
/// last sent per peer, kept for introspection and tests; the export rules
/// themselves never consult it).
class RibSet {
 public:
  explicit RibSet(std::uint32_t local_as) : local_as_(local_as) {}

  std::uint32_t local_as() const { return local_as_; }

  const std::map<Prefix, RibEntry>& loc_rib() const { return loc_; }

  const std::map<Prefix, RibEntry>* adj_rib_in(std::uint32_t peer) const {
    auto it = adj_in_.find(peer);
    return it == adj_in_.end() ? nullptr : &it->second;
  }

  const std::map<Prefix, std::optional<PathAttrs>>* adj_rib_out(std::uint32_t peer) const {
    auto it = adj_out_.find(peer);
    return it == adj_out_.end() ? nullptr : &it->second;
  }

  /// Applies one UPDATE from `peer`: withdrawals first, then loop-checked
  /// NLRI inserts, then one decision pass over the affected prefixes.
  ProcessResult process_update(std::uint32_t peer, const UpdateMsg& u, sim::TimeUs now) {
    if (!u.nlri.empty() && !u.attrs) return {UpdateStatus::Malformed, {}};
    std::set<Prefix> affected;
    auto& from_peer = adj_in_[peer];
    for (const Prefix& p : u.withdrawn) {
      from_peer.erase(p);
      affected.insert(p);
    }
    if (u.attrs) {
      for (const Prefix& p : u.nlri) {
        if (u.attrs->contains_as(local_as_)) continue;  // loop rejected, not stored
        from_peer[p] = RibEntry{p, *u.attrs, peer, now};
        affected.insert(p);
      }
    }
    return {UpdateStatus::Ok, rerun_decision(affected)};
  }

  /// Injects a locally originated route (empty or synthetic AS path); the
  /// local AS is prepended only at export time.
  RibDelta originate(const Prefix& p, const PathAttrs& attrs, sim::TimeUs now) {
    adj_in_[kLocalPeer][p] = RibEntry{p, attrs, kLocalPeer, now};
    return rerun_decision({p});
  }

  /// Drops everything learned from a dead peer and re-decides.
  RibDelta flush_peer(std::uint32_t peer) {
    std::set<Prefix> affected;
    auto it = adj_in_.find(peer);
    if (it == adj_in_.end()) return {};
    for (const auto& [p, entry] : it->second) affected.insert(p);
    adj_in_.erase(it);
    adj_out_.erase(peer);
    return rerun_decision(affected);
  }

  /// Export rules, in order, per changed prefix:
  ///   1. best gone or learned from this peer -> withdraw (split horizon);
  ///   2. best path already contains the peer's AS -> skip;
  ///   3. otherwise announce with local AS prepended and next-hop self.
  /// Announcements sharing identical attributes are packed into maximal
  /// messages under the 4096-byte cap.
  std::vector<UpdateMsg> export_updates(const RibDelta& delta, std::uint32_t to_peer,
                                        std::uint32_t to_peer_as,
                                        std::uint32_t self_next_hop) {
    std::vector<Prefix> withdraws;
    std::map<PathAttrs, std::vector<Prefix>> announce_groups;
    auto& out_rib = adj_out_[to_peer];
    for (const Prefix& p : delta) {
      auto best = loc_.find(p);
      if (best == loc_.end() || best->second.learned_from == to_peer) {
        withdraws.push_back(p);
        out_rib[p] = std::nullopt;
        continue;
      }
      if (best->second.attrs.contains_as(to_peer_as)) continue;
      PathAttrs exported = best->second.attrs;
      exported.as_path.insert(exported.as_path.begin(), local_as_);
      exported.next_hop = self_next_hop;
      announce_groups[exported].push_back(p);
      out_rib[p] = exported;
    }

    std::vector<UpdateMsg> out;
    // Withdraw-only messages first.
    UpdateMsg current;
    std::size_t size = encoded_size(current);
    for (const Prefix& p : withdraws) {
      std::size_t extra = detail::prefix_wire_size(p);
      if (size + extra > kMaxMessageSize) {
        out.push_back(std::move(current));
        current = UpdateMsg{};
        size = encoded_size(current);
      }
      current.withdrawn.push_back(p);
      size += extra;
    }
    if (!current.withdrawn.empty()) out.push_back(std::move(current));

    for (auto& [attrs, prefixes] : announce_groups) {
      UpdateMsg msg;
      msg.attrs = attrs;
      std::size_t base = encoded_size(msg);
      std::size_t acc = base;
      for (const Prefix& p : prefixes) {
        std::size_t extra = detail::prefix_wire_size(p);
        if (acc + extra > kMaxMessageSize) {
          out.push_back(std::move(msg));
          msg = UpdateMsg{};
          msg.attrs = attrs;
          acc = base;
        }
        msg.nlri.push_back(p);
        acc += extra;
      }
      if (!msg.nlri.empty()) out.push_back(std::move(msg));
    }
    return out;
  }

  /// Continuous loop-freedom check: no stored entry may carry the local AS.
  bool loop_free() const {
    for (const auto& [peer, table] : adj_in_) {
      if (peer == kLocalPeer) continue;
      for (const auto& [p, e] : table)
        if (e.attrs.contains_as(local_as_)) return false;
    }
    for (const auto& [p, e] : loc_)
      if (e.learned_from != kLocalPeer && e.attrs.contains_as(local_as_)) return false;
    return true;
  }

 private:
  RibDelta rerun_decision(const std::set<Prefix>& affected) {
    RibDelta delta;
    for (const Prefix& p : affected) {
      std::vector<const RibEntry*> candidates;
      for (const auto& [peer, table] : adj_in_) {
        auto it = table.find(p);
        if (it != table.end()) candidates.push_back(&it->second);
      }
      const RibEntry* best = decide(candidates);
      auto cur = loc_.find(p);
      if (!best) {
        if (cur != loc_.end()) {
          loc_.erase(cur);
          delta.push_back(p);
        }
      } else if (cur == loc_.end() || !cur->second.same_route(*best)) {
        loc_[p] = *best;
        delta.push_back(p);
      }
    }
    return delta;
  }

  std::uint32_t local_as_;
  std::map<std::uint32_t, std::map<Prefix, RibEntry>> adj_in_;
  std::map<Prefix, RibEntry> loc_;
  std::map<std::uint32_t, std::map<Prefix, std::optional<PathAttrs>>> adj_out_;
};

}  // namespace roq::bgp
