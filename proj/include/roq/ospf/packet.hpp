#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "roq/bytes.hpp"
#include "roq/prefix.hpp"

namespace roq::ospf {

using RouterId = std::uint32_t;

enum class PacketType : std::uint8_t {
  Hello = 1,
  DbDescription = 2,
  LsRequest = 3,
  LsUpdate = 4,
  LsAck = 5,
};

enum class LsaType : std::uint8_t { RouterLsa = 1, ExternalPrefixLsa = 5 };

struct LsaKey {
  LsaType type = LsaType::RouterLsa;
  RouterId adv_router = 0;
  std::uint32_t lsa_id = 0;
  auto operator<=>(const LsaKey&) const = default;
};

constexpr std::int32_t kInitialSeq = static_cast<std::int32_t>(0x80000001u);
constexpr std::uint16_t kMaxAge = 3600;

struct RouterLink {
  RouterId neighbor = 0;
  std::uint32_t cost = 0;
  auto operator<=>(const RouterLink&) const = default;
};

struct RouterLsaBody {
  std::vector<RouterLink> links;
  auto operator<=>(const RouterLsaBody&) const = default;
};

struct ExternalLsaBody {
  Prefix prefix;
  std::uint32_t cost = 0;
  auto operator<=>(const ExternalLsaBody&) const = default;
};

struct Lsa {
  LsaKey key;
  std::int32_t seq = kInitialSeq;  // strictly increasing per key
  std::uint16_t age = 0;           // seconds; kMaxAge marks deletion
  std::variant<RouterLsaBody, ExternalLsaBody> body;
  auto operator<=>(const Lsa&) const = default;

  bool same_content(const Lsa& o) const {
    return key == o.key && seq == o.seq && body == o.body;  // age drift ignored
  }
};

struct LsaHeader {
  LsaKey key;
  std::int32_t seq = kInitialSeq;
  std::uint16_t age = 0;
  auto operator<=>(const LsaHeader&) const = default;
};

inline LsaHeader header_of(const Lsa& l) { return {l.key, l.seq, l.age}; }

struct HelloPacket {
  std::uint32_t hello_interval_s = 10;
  std::uint32_t dead_interval_s = 40;
  std::vector<RouterId> neighbors_seen;
  auto operator<=>(const HelloPacket&) const = default;
};

struct DbdFlags {
  bool init = false;
  bool more = false;
  bool master = false;
  auto operator<=>(const DbdFlags&) const = default;
};

struct DbDescriptionPacket {
  std::uint32_t dd_seq = 0;
  DbdFlags flags;
  std::vector<LsaHeader> headers;
  auto operator<=>(const DbDescriptionPacket&) const = default;
};

struct LsRequestPacket {
  std::vector<LsaKey> keys;
  auto operator<=>(const LsRequestPacket&) const = default;
};

struct LsUpdatePacket {
  std::vector<Lsa> lsas;
  auto operator<=>(const LsUpdatePacket&) const = default;
};

struct LsAckPacket {
  std::vector<LsaHeader> headers;
  auto operator<=>(const LsAckPacket&) const = default;
};

/// Every packet carries its sender's router id up front.
struct OspfPacket {
  RouterId sender = 0;
  std::variant<HelloPacket, DbDescriptionPacket, LsRequestPacket, LsUpdatePacket, LsAckPacket>
      body;
  auto operator<=>(const OspfPacket&) const = default;
};

inline PacketType packet_type(const OspfPacket& p) {
  return static_cast<PacketType>(p.body.index() + 1);
}

// --- codec -------------------------------------------------------------------
//
// Fixed-layout custom encoding; this is not the OSPFv2 wire format. Big
// endian throughout: [1B type][4B sender][body].

namespace detail {

inline void write_header(ByteWriter& w, const LsaHeader& h) {
  w.u8(static_cast<std::uint8_t>(h.key.type));
  w.u32(h.key.adv_router);
  w.u32(h.key.lsa_id);
  w.u32(static_cast<std::uint32_t>(h.seq));
  w.u16(h.age);
}

inline bool read_key(ByteReader& r, LsaKey& k) {
  std::uint8_t t = r.u8();
  if (t != 1 && t != 5) return false;
  k.type = static_cast<LsaType>(t);
  k.adv_router = r.u32();
  k.lsa_id = r.u32();
  return r.ok();
}

inline bool read_header(ByteReader& r, LsaHeader& h) {
  if (!read_key(r, h.key)) return false;
  h.seq = static_cast<std::int32_t>(r.u32());
  h.age = r.u16();
  return r.ok();
}

inline void write_lsa(ByteWriter& w, const Lsa& l) {
  write_header(w, header_of(l));
  if (const auto* rb = std::get_if<RouterLsaBody>(&l.body)) {
    w.u16(static_cast<std::uint16_t>(rb->links.size()));
    for (const RouterLink& ln : rb->links) {
      w.u32(ln.neighbor);
      w.u32(ln.cost);
    }
  } else {
    const auto& eb = std::get<ExternalLsaBody>(l.body);
    w.u8(static_cast<std::uint8_t>(eb.prefix.family));
    w.u8(eb.prefix.length);
    w.raw(eb.prefix.bits.data(), eb.prefix.byte_count());
    w.u32(eb.cost);
  }
}

inline bool read_lsa(ByteReader& r, Lsa& l) {
  LsaHeader h;
  if (!read_header(r, h)) return false;
  l.key = h.key;
  l.seq = h.seq;
  l.age = h.age;
  if (h.key.type == LsaType::RouterLsa) {
    RouterLsaBody b;
    std::uint16_t n = r.u16();
    for (std::uint16_t i = 0; i < n && r.ok(); ++i) {
      RouterLink ln;
      ln.neighbor = r.u32();
      ln.cost = r.u32();
      b.links.push_back(ln);
    }
    l.body = std::move(b);
  } else {
    ExternalLsaBody b;
    std::uint8_t fam = r.u8();
    std::uint8_t len = r.u8();
    if (!r.ok() || (fam != 4 && fam != 6)) return false;
    Prefix::Family family = fam == 4 ? Prefix::Family::V4 : Prefix::Family::V6;
    if (len > Prefix::max_length(family)) return false;
    std::array<std::uint8_t, 16> addr{};
    Bytes raw = r.raw((len + 7u) / 8u);
    if (!r.ok()) return false;
    std::copy_n(raw.begin(), std::min<std::size_t>(raw.size(), addr.size()), addr.begin());
    b.prefix = Prefix::make(family, addr, len);
    b.cost = r.u32();
    l.body = std::move(b);
  }
  return r.ok();
}

}  // namespace detail

inline Bytes encode_packet(const OspfPacket& p) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(packet_type(p)));
  w.u32(p.sender);
  if (const auto* h = std::get_if<HelloPacket>(&p.body)) {
    w.u32(h->hello_interval_s);
    w.u32(h->dead_interval_s);
    w.u16(static_cast<std::uint16_t>(h->neighbors_seen.size()));
    for (RouterId n : h->neighbors_seen) w.u32(n);
  } else if (const auto* d = std::get_if<DbDescriptionPacket>(&p.body)) {
    w.u32(d->dd_seq);
    w.u8(static_cast<std::uint8_t>((d->flags.init ? 1 : 0) | (d->flags.more ? 2 : 0) |
                                   (d->flags.master ? 4 : 0)));
    w.u16(static_cast<std::uint16_t>(d->headers.size()));
    for (const LsaHeader& h2 : d->headers) detail::write_header(w, h2);
  } else if (const auto* rq = std::get_if<LsRequestPacket>(&p.body)) {
    w.u16(static_cast<std::uint16_t>(rq->keys.size()));
    for (const LsaKey& k : rq->keys) {
      w.u8(static_cast<std::uint8_t>(k.type));
      w.u32(k.adv_router);
      w.u32(k.lsa_id);
    }
  } else if (const auto* up = std::get_if<LsUpdatePacket>(&p.body)) {
    w.u16(static_cast<std::uint16_t>(up->lsas.size()));
    for (const Lsa& l : up->lsas) detail::write_lsa(w, l);
  } else {
    const auto& ack = std::get<LsAckPacket>(p.body);
    w.u16(static_cast<std::uint16_t>(ack.headers.size()));
    for (const LsaHeader& h2 : ack.headers) detail::write_header(w, h2);
  }
  return w.take();
}

enum class PacketStatus : std::uint8_t { Ok, Truncated, UnknownPacketType };

struct PacketDecode {
  PacketStatus status = PacketStatus::Truncated;
  OspfPacket packet;
  std::size_t consumed = 0;
};

inline PacketDecode decode_packet(ByteView b) {
  if (b.size() < 5) return {PacketStatus::Truncated, {}, 0};
  std::uint8_t type = b[0];
  if (type < 1 || type > 5) return {PacketStatus::UnknownPacketType, {}, 0};
  ByteReader r(b.subspan(1));
  OspfPacket p;
  p.sender = r.u32();
  switch (static_cast<PacketType>(type)) {
    case PacketType::Hello: {
      HelloPacket h;
      h.hello_interval_s = r.u32();
      h.dead_interval_s = r.u32();
      std::uint16_t n = r.u16();
      for (std::uint16_t i = 0; i < n && r.ok(); ++i) h.neighbors_seen.push_back(r.u32());
      p.body = std::move(h);
      break;
    }
    case PacketType::DbDescription: {
      DbDescriptionPacket d;
      d.dd_seq = r.u32();
      std::uint8_t flags = r.u8();
      if (flags > 7) return {PacketStatus::Truncated, {}, 0};
      d.flags = {(flags & 1) != 0, (flags & 2) != 0, (flags & 4) != 0};
      std::uint16_t n = r.u16();
      for (std::uint16_t i = 0; i < n && r.ok(); ++i) {
        LsaHeader h;
        if (!detail::read_header(r, h)) return {PacketStatus::Truncated, {}, 0};
        d.headers.push_back(h);
      }
      p.body = std::move(d);
      break;
    }
    case PacketType::LsRequest: {
      LsRequestPacket rq;
      std::uint16_t n = r.u16();
      for (std::uint16_t i = 0; i < n && r.ok(); ++i) {
        LsaKey k;
        if (!detail::read_key(r, k)) return {PacketStatus::Truncated, {}, 0};
        rq.keys.push_back(k);
      }
      p.body = std::move(rq);
      break;
    }
    case PacketType::LsUpdate: {
      LsUpdatePacket up;
      std::uint16_t n = r.u16();
      for (std::uint16_t i = 0; i < n && r.ok(); ++i) {
        Lsa l;
        if (!detail::read_lsa(r, l)) return {PacketStatus::Truncated, {}, 0};
        up.lsas.push_back(std::move(l));
      }
      p.body = std::move(up);
      break;
    }
    case PacketType::LsAck: {
      LsAckPacket ack;
      std::uint16_t n = r.u16();
      for (std::uint16_t i = 0; i < n && r.ok(); ++i) {
        LsaHeader h;
        if (!detail::read_header(r, h)) return {PacketStatus::Truncated, {}, 0};
        ack.headers.push_back(h);
      }
      p.body = std::move(ack);
      break;
    }
  }
  if (!r.ok()) return {PacketStatus::Truncated, {}, 0};
  return {PacketStatus::Ok, std::move(p), 1 + r.consumed()};
}

// --- stream framing (OverQuic mode) -------------------------------------------
//
// A 4-byte length prefix makes parsing off a byte stream unambiguous.

inline Bytes frame_for_stream(const OspfPacket& p) {
  Bytes body = encode_packet(p);
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(body.size()));
  w.raw(body);
  return w.take();
}

/// Decodes one length-prefixed packet from the front of a stream buffer.
/// Truncated means "wait for more bytes".
inline PacketDecode decode_framed(ByteView b) {
  if (b.size() < 4) return {PacketStatus::Truncated, {}, 0};
  std::uint32_t len = static_cast<std::uint32_t>(b[0]) << 24 |
                      static_cast<std::uint32_t>(b[1]) << 16 |
                      static_cast<std::uint32_t>(b[2]) << 8 | static_cast<std::uint32_t>(b[3]);
  if (b.size() < 4 + len) return {PacketStatus::Truncated, {}, 0};
  PacketDecode d = decode_packet(b.subspan(4, len));
  if (d.status != PacketStatus::Ok) return d;
  if (d.consumed != len) return {PacketStatus::Truncated, {}, 0};
  d.consumed = 4 + len;
  return d;
}

}  // namespace roq::ospf
