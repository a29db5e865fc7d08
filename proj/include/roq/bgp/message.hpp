#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "roq/bytes.hpp"
#include "roq/errors.hpp"
#include "roq/prefix.hpp"

namespace roq::bgp {

constexpr std::size_t kMarkerSize = 16;
constexpr std::size_t kHeaderSize = 19;
constexpr std::size_t kMaxMessageSize = 4096;

enum class MsgType : std::uint8_t { Open = 1, Update = 2, Notification = 3, Keepalive = 4 };

enum class Origin : std::uint8_t { Igp = 0, Egp = 1, Incomplete = 2 };

/// AS numbers are 32-bit on the wire throughout; there is no 2-octet
/// compatibility mode.
struct PathAttrs {
  Origin origin = Origin::Igp;
  std::vector<std::uint32_t> as_path;
  std::uint32_t next_hop = 0;
  std::optional<std::uint32_t> med;

  auto operator<=>(const PathAttrs&) const = default;

  bool contains_as(std::uint32_t as) const {
    for (std::uint32_t a : as_path)
      if (a == as) return true;
    return false;
  }
};

/// The version field is fixed at 4 and not carried on the wire, which
/// keeps the Open body at 10 bytes (no optional-parameters block).
struct OpenMsg {
  std::uint8_t version = 4;
  std::uint32_t my_as = 0;
  std::uint16_t hold_time_s = 0;
  std::uint32_t bgp_id = 0;
  auto operator<=>(const OpenMsg&) const = default;
};

struct UpdateMsg {
  std::vector<Prefix> withdrawn;
  std::optional<PathAttrs> attrs;  // required when nlri is non-empty
  std::vector<Prefix> nlri;
  auto operator<=>(const UpdateMsg&) const = default;
};

struct NotificationMsg {
  std::uint8_t code = 0;
  std::uint8_t subcode = 0;
  Bytes data;
  auto operator<=>(const NotificationMsg&) const = default;
};

struct KeepaliveMsg {
  auto operator<=>(const KeepaliveMsg&) const = default;
};

using BgpMessage = std::variant<OpenMsg, UpdateMsg, NotificationMsg, KeepaliveMsg>;

// RFC 4271 notification codes, reused as-is.
namespace notif {
constexpr std::uint8_t kMessageHeaderError = 1;
constexpr std::uint8_t kOpenError = 2;
constexpr std::uint8_t kUpdateError = 3;
constexpr std::uint8_t kHoldTimerExpired = 4;
constexpr std::uint8_t kFsmError = 5;
constexpr std::uint8_t kSubBadMarker = 1;
constexpr std::uint8_t kSubBadLength = 2;
constexpr std::uint8_t kSubBadType = 3;
constexpr std::uint8_t kSubUnsupportedVersion = 1;
constexpr std::uint8_t kSubBadPeerAs = 2;
constexpr std::uint8_t kSubMalformedAttrs = 1;
}  // namespace notif

namespace detail {

inline void write_prefix(ByteWriter& w, const Prefix& p) {
  w.u8(static_cast<std::uint8_t>(p.family));
  w.u8(p.length);
  w.raw(p.bits.data(), p.byte_count());
}

inline std::size_t prefix_wire_size(const Prefix& p) { return 2u + p.byte_count(); }

inline bool read_prefix(ByteReader& r, Prefix& out) {
  std::uint8_t fam = r.u8();
  std::uint8_t len = r.u8();
  if (!r.ok()) return false;
  if (fam != 4 && fam != 6) return false;
  Prefix::Family family = fam == 4 ? Prefix::Family::V4 : Prefix::Family::V6;
  if (len > Prefix::max_length(family)) return false;
  std::array<std::uint8_t, 16> addr{};
  Bytes raw = r.raw((len + 7u) / 8u);
  if (!r.ok()) return false;
  std::copy_n(raw.begin(), std::min<std::size_t>(raw.size(), addr.size()), addr.begin());
  out = Prefix::make(family, addr, len);
  // Canonical form on the wire: no set bits past the prefix length.
  for (std::size_t i = 0; i < raw.size(); ++i)
    if (out.bits[i] != raw[i]) return false;
  return true;
}

inline void write_attrs(ByteWriter& w, const PathAttrs& a) {
  w.u8(static_cast<std::uint8_t>(a.origin));
  w.u8(static_cast<std::uint8_t>(a.as_path.size()));
  for (std::uint32_t as : a.as_path) w.u32(as);
  w.u32(a.next_hop);
  w.u8(a.med ? 1 : 0);
  if (a.med) w.u32(*a.med);
}

inline std::size_t attrs_wire_size(const PathAttrs& a) {
  return 2u + 4u * a.as_path.size() + 4u + 1u + (a.med ? 4u : 0u);
}

inline bool read_attrs(ByteReader& r, PathAttrs& out) {
  std::uint8_t origin = r.u8();
  if (origin > 2) return false;
  out.origin = static_cast<Origin>(origin);
  std::uint8_t n = r.u8();
  out.as_path.clear();
  for (std::uint8_t i = 0; i < n; ++i) out.as_path.push_back(r.u32());
  out.next_hop = r.u32();
  std::uint8_t has_med = r.u8();
  if (has_med > 1) return false;
  if (has_med) out.med = r.u32();
  else out.med.reset();
  return r.ok();
}

}  // namespace detail

/// Exact encoded size, used by the export packer to respect the 4096-byte
/// cap without trial encodes.
inline std::size_t encoded_size(const UpdateMsg& u) {
  std::size_t n = kHeaderSize + 2 + 1 + 2;
  for (const Prefix& p : u.withdrawn) n += detail::prefix_wire_size(p);
  if (u.attrs) n += detail::attrs_wire_size(*u.attrs);
  for (const Prefix& p : u.nlri) n += detail::prefix_wire_size(p);
  return n;
}

inline Bytes encode_message(const BgpMessage& m) {
  ByteWriter w;
  w.fill(0xFF, kMarkerSize);
  w.u16(0);  // patched below
  if (const auto* open = std::get_if<OpenMsg>(&m)) {
    if (open->version != 4) fail(Errc::InvalidValue, "only BGP version 4 is encodable");
    w.u8(static_cast<std::uint8_t>(MsgType::Open));
    w.u32(open->my_as);
    w.u16(open->hold_time_s);
    w.u32(open->bgp_id);
  } else if (const auto* up = std::get_if<UpdateMsg>(&m)) {
    if (!up->nlri.empty() && !up->attrs)
      fail(Errc::InvalidValue, "update with NLRI requires path attributes");
    w.u8(static_cast<std::uint8_t>(MsgType::Update));
    w.u16(static_cast<std::uint16_t>(up->withdrawn.size()));
    for (const Prefix& p : up->withdrawn) detail::write_prefix(w, p);
    w.u8(up->attrs ? 1 : 0);
    if (up->attrs) detail::write_attrs(w, *up->attrs);
    w.u16(static_cast<std::uint16_t>(up->nlri.size()));
    for (const Prefix& p : up->nlri) detail::write_prefix(w, p);
  } else if (const auto* notif_msg = std::get_if<NotificationMsg>(&m)) {
    w.u8(static_cast<std::uint8_t>(MsgType::Notification));
    w.u8(notif_msg->code);
    w.u8(notif_msg->subcode);
    w.raw(notif_msg->data);
  } else {
    w.u8(static_cast<std::uint8_t>(MsgType::Keepalive));
  }
  if (w.size() > kMaxMessageSize)
    fail(Errc::MessageTooLarge,
         "encoded message is " + std::to_string(w.size()) + " bytes; cap is 4096");
  w.patch_u16(kMarkerSize, static_cast<std::uint16_t>(w.size()));
  return w.take();
}

enum class DecodeStatus : std::uint8_t {
  Ok,
  NeedMoreData,
  BadMarker,
  BadLength,
  UnknownType,
  Malformed,
};

struct DecodeResult {
  DecodeStatus status = DecodeStatus::NeedMoreData;
  BgpMessage message = KeepaliveMsg{};
  std::size_t consumed = 0;
};

/// Stream-safe: give it the front of a receive buffer; it consumes exactly
/// one message or tells you why it cannot.
inline DecodeResult decode_message(ByteView b) {
  // Marker bytes are checked as far as they are available, so corruption is
  // reported before the full header arrives.
  std::size_t marker_avail = std::min(b.size(), kMarkerSize);
  for (std::size_t i = 0; i < marker_avail; ++i)
    if (b[i] != 0xFF) return {DecodeStatus::BadMarker, KeepaliveMsg{}, 0};
  if (b.size() < kHeaderSize) return {DecodeStatus::NeedMoreData, KeepaliveMsg{}, 0};

  std::uint16_t length = static_cast<std::uint16_t>(b[16] << 8 | b[17]);
  std::uint8_t type = b[18];
  if (length < kHeaderSize || length > kMaxMessageSize)
    return {DecodeStatus::BadLength, KeepaliveMsg{}, 0};
  if (type < 1 || type > 4) return {DecodeStatus::UnknownType, KeepaliveMsg{}, 0};
  if (b.size() < length) return {DecodeStatus::NeedMoreData, KeepaliveMsg{}, 0};

  ByteReader r(b.subspan(kHeaderSize, length - kHeaderSize));
  auto done = [&](BgpMessage msg) -> DecodeResult {
    if (!r.ok() || r.remaining() != 0) return {DecodeStatus::Malformed, KeepaliveMsg{}, 0};
    return {DecodeStatus::Ok, std::move(msg), length};
  };

  switch (static_cast<MsgType>(type)) {
    case MsgType::Open: {
      OpenMsg m;
      m.version = 4;
      m.my_as = r.u32();
      m.hold_time_s = r.u16();
      m.bgp_id = r.u32();
      return done(m);
    }
    case MsgType::Update: {
      UpdateMsg m;
      std::uint16_t wd = r.u16();
      for (std::uint16_t i = 0; i < wd && r.ok(); ++i) {
        Prefix p;
        if (!detail::read_prefix(r, p)) return {DecodeStatus::Malformed, KeepaliveMsg{}, 0};
        m.withdrawn.push_back(p);
      }
      std::uint8_t has_attrs = r.u8();
      if (has_attrs > 1) return {DecodeStatus::Malformed, KeepaliveMsg{}, 0};
      if (has_attrs) {
        PathAttrs a;
        if (!detail::read_attrs(r, a)) return {DecodeStatus::Malformed, KeepaliveMsg{}, 0};
        m.attrs = a;
      }
      std::uint16_t nl = r.u16();
      for (std::uint16_t i = 0; i < nl && r.ok(); ++i) {
        Prefix p;
        if (!detail::read_prefix(r, p)) return {DecodeStatus::Malformed, KeepaliveMsg{}, 0};
        m.nlri.push_back(p);
      }
      if (!m.nlri.empty() && !m.attrs) return {DecodeStatus::Malformed, KeepaliveMsg{}, 0};
      return done(std::move(m));
    }
    case MsgType::Notification: {
      NotificationMsg m;
      m.code = r.u8();
      m.subcode = r.u8();
      m.data = r.raw(r.remaining());
      return done(std::move(m));
    }
    case MsgType::Keepalive:
      return done(KeepaliveMsg{});
  }
  return {DecodeStatus::UnknownType, KeepaliveMsg{}, 0};
}

}  // namespace roq::bgp
