#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "roq/errors.hpp"
#include "roq/ospf/packet.hpp"

namespace roq::ospf {

enum class CompareResult : std::uint8_t { ANewer, Same, BNewer };

/// Seq decides first; on equal seq an age difference beyond 15 seconds
/// prefers the younger copy, anything closer is the same instance.
constexpr std::uint16_t kAgeDiffThreshold = 15;

inline CompareResult lsdb_compare(const LsaHeader& a, const LsaHeader& b) {
  if (a.key != b.key) fail(Errc::KeyMismatch, "comparing LSAs with different keys");
  if (a.seq != b.seq) return a.seq > b.seq ? CompareResult::ANewer : CompareResult::BNewer;
  std::uint16_t hi = std::max(a.age, b.age), lo = std::min(a.age, b.age);
  if (hi - lo > kAgeDiffThreshold)
    return a.age < b.age ? CompareResult::ANewer : CompareResult::BNewer;
  return CompareResult::Same;
}

/// Replicated link-state database plus the per-neighbor retransmission and
/// request bookkeeping that keeps flooding reliable.
class Lsdb {
 public:
  const std::map<LsaKey, Lsa>& contents() const { return store_; }

  const Lsa* find(const LsaKey& k) const {
    auto it = store_.find(k);
    return it == store_.end() ? nullptr : &it->second;
  }

  void install(const Lsa& l) { store_[l.key] = l; }

  void erase(const LsaKey& k) { store_.erase(k); }

  std::vector<LsaHeader> headers() const {
    std::vector<LsaHeader> out;
    for (const auto& [k, l] : store_) out.push_back(header_of(l));
    return out;
  }

  /// Element-wise equality ignoring age drift.
  bool same_content(const Lsdb& o) const {
    if (store_.size() != o.store_.size()) return false;
    auto a = store_.begin();
    auto b = o.store_.begin();
    for (; a != store_.end(); ++a, ++b)
      if (!(a->first == b->first) || !a->second.same_content(b->second)) return false;
    return true;
  }

  /// One second of aging across the database; MaxAge entries are flushed.
  void age_tick() {
    for (auto it = store_.begin(); it != store_.end();) {
      if (it->second.age < kMaxAge) ++it->second.age;
      if (it->second.age >= kMaxAge) it = store_.erase(it);
      else ++it;
    }
  }

  // --- per-neighbor flooding state -----------------------------------------

  std::map<LsaKey, Lsa>& retrans(RouterId nbr) { return retrans_[nbr]; }
  std::set<LsaKey>& requests(RouterId nbr) { return requests_[nbr]; }

  const std::map<LsaKey, Lsa>* retrans_of(RouterId nbr) const {
    auto it = retrans_.find(nbr);
    return it == retrans_.end() ? nullptr : &it->second;
  }
  const std::set<LsaKey>* requests_of(RouterId nbr) const {
    auto it = requests_.find(nbr);
    return it == requests_.end() ? nullptr : &it->second;
  }

  bool requests_empty(RouterId nbr) const {
    auto it = requests_.find(nbr);
    return it == requests_.end() || it->second.empty();
  }

  bool quiescent() const {
    for (const auto& [n, m] : retrans_)
      if (!m.empty()) return false;
    for (const auto& [n, s] : requests_)
      if (!s.empty()) return false;
    return true;
  }

  void drop_neighbor_state(RouterId nbr) {
    retrans_.erase(nbr);
    requests_.erase(nbr);
  }

  /// A newly installed instance satisfies any matching outstanding request.
  void satisfy_requests(const LsaHeader& h) {
    for (auto& [n, keys] : requests_) keys.erase(h.key);
  }

 private:
  std::map<LsaKey, Lsa> store_;
  std::map<RouterId, std::map<LsaKey, Lsa>> retrans_;
  std::map<RouterId, std::set<LsaKey>> requests_;
};

}  // namespace roq::ospf
