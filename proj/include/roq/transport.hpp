#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "roq/bytes.hpp"
#include "roq/errors.hpp"
#include "roq/log.hpp"
#include "roq/netsim.hpp"

namespace roq::transport {

enum class TransportKind : std::uint8_t { PlainStream = 1, SecureMux = 2 };

inline const char* kind_name(TransportKind k) {
  return k == TransportKind::PlainStream ? "plain-stream" : "secure-mux";
}

struct EndpointAddress {
  sim::NodeId node = 0;
  std::uint16_t port = 0;
};

/// Self-signed identity: a subject name plus key material. The fingerprint
/// binds both, so two identities with the same subject but different keys
/// do not collide.
struct Certificate {
  std::string subject;
  std::uint64_t public_key = 0;
};

inline std::uint64_t fingerprint_of(const Certificate& c) {
  return mix64(fnv1a64(c.subject), c.public_key);
}

enum class TrustMode : std::uint8_t { AcceptAny, PinnedFingerprints };

struct SecurityConfig {
  Certificate identity;
  TrustMode trust = TrustMode::AcceptAny;
  std::set<std::uint64_t> pinned;
  std::string alpn;

  static SecurityConfig self_signed(const std::string& subject, const std::string& alpn,
                                    std::uint64_t key_seed = 0x5eed) {
    SecurityConfig sc;
    sc.identity.subject = subject;
    sc.identity.public_key = mix64(fnv1a64(subject), key_seed);
    sc.alpn = alpn;
    return sc;
  }

  std::uint64_t fingerprint() const { return fingerprint_of(identity); }

  SecurityConfig& pin(std::uint64_t fp) {
    trust = TrustMode::PinnedFingerprints;
    pinned.insert(fp);
    return *this;
  }

  bool trusts(std::uint64_t fp) const {
    return trust == TrustMode::AcceptAny || pinned.count(fp) != 0;
  }
};

using ConnId = std::uint64_t;
using StreamId = std::uint32_t;

/// Connections are identified by (owning node, connection id): both ends of
/// one connection share the id but hold independent state.
struct ConnRef {
  sim::NodeId node = sim::kInvalidNode;
  ConnId id = 0;
  bool valid() const { return node != sim::kInvalidNode && id != 0; }
  auto operator<=>(const ConnRef&) const = default;
};

enum class ConnState : std::uint8_t { Handshaking, Established, Closed };

enum class CloseReason : std::uint8_t {
  None = 0,
  LocalClose,
  PeerClose,
  ConnectionRefused,
  AlpnMismatch,
  UntrustedPeer,
  HandshakeTimeout,
  RetransmitTimeout,
};

inline const char* close_reason_name(CloseReason r) {
  switch (r) {
    case CloseReason::None: return "none";
    case CloseReason::LocalClose: return "local-close";
    case CloseReason::PeerClose: return "peer-close";
    case CloseReason::ConnectionRefused: return "connection-refused";
    case CloseReason::AlpnMismatch: return "alpn-mismatch";
    case CloseReason::UntrustedPeer: return "untrusted-peer";
    case CloseReason::HandshakeTimeout: return "handshake-timeout";
    case CloseReason::RetransmitTimeout: return "retransmit-timeout";
  }
  return "?";
}

struct CloseInfo {
  CloseReason reason = CloseReason::None;
  std::uint32_t code = 0;
  std::string text;
};

struct TransportEvent {
  enum class Type : std::uint8_t { Accepted, Established, StreamOpened, Data, Closed };
  Type type;
  ConnRef conn;
  StreamId stream = 0;
  Bytes data;
  CloseInfo close;
};

using EventSink = std::function<void(const TransportEvent&)>;

struct ConnectionInfo {
  ConnId id = 0;
  TransportKind kind = TransportKind::PlainStream;
  ConnState state = ConnState::Handshaking;
  sim::NodeId local = 0;
  sim::NodeId remote = 0;
  std::uint16_t remote_port = 0;
  bool dialer = false;
  std::optional<std::uint64_t> peer_identity;  // SecureMux + Established only
  CloseInfo close;
};

struct StreamInfo {
  StreamId id = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  bool open = true;
};

struct ListenerHandle {
  sim::NodeId node = 0;
  std::uint16_t port = 0;
  TransportKind kind = TransportKind::PlainStream;
};

// --- wire formats ----------------------------------------------------------
//
// Every datagram starts with one wire-type byte. The SecureMux frame layout
// after establishment is, including that byte:
//   [1B frame type][8B conn id][4B stream id][8B offset][2B length][payload][8B tag]
// The PlainStream segment body (after the wire-type byte) is:
//   [8B conn id][8B seq][2B length][payload]

enum class WireType : std::uint8_t {
  PlainSyn = 0x01,
  PlainSynAck = 0x02,
  PlainReset = 0x03,
  PlainData = 0x04,
  PlainAck = 0x05,
  PlainClose = 0x06,
  MuxClientHello = 0x11,
  MuxServerHello = 0x12,
  MuxReject = 0x13,
  MuxStreamData = 0x14,
  MuxAck = 0x15,
  MuxClose = 0x16,
  RawDatagram = 0x60,
};

/// Stream writes are cut into segments of at most this many payload bytes,
/// mirroring common QUIC datagram budgets and keeping well under the
/// default 1500-byte link MTU.
constexpr std::size_t kMaxSegmentPayload = 1200;

struct PlainSegment {
  ConnId conn = 0;
  std::uint64_t seq = 0;  // byte offset of payload[0] in the stream
  Bytes payload;
  bool operator==(const PlainSegment&) const = default;
};

inline Bytes encode_plain_segment(const PlainSegment& s) {
  ByteWriter w;
  w.u64(s.conn);
  w.u64(s.seq);
  w.u16(static_cast<std::uint16_t>(s.payload.size()));
  w.raw(s.payload);
  return w.take();
}

inline std::optional<PlainSegment> decode_plain_segment(ByteView b) {
  ByteReader r(b);
  PlainSegment s;
  s.conn = r.u64();
  s.seq = r.u64();
  std::uint16_t len = r.u16();
  s.payload = r.raw(len);
  if (!r.ok() || r.remaining() != 0) return std::nullopt;
  return s;
}

struct MuxFrame {
  WireType type = WireType::MuxStreamData;
  ConnId conn = 0;
  StreamId stream = 0;
  std::uint64_t offset = 0;
  Bytes payload;
  bool operator==(const MuxFrame&) const = default;
};

inline std::uint64_t mux_tag(std::uint64_t key, ByteView frame_without_tag) {
  ByteWriter kw;
  kw.u64(key);
  std::uint64_t h = fnv1a64(ByteView(kw.data().data(), kw.data().size()));
  return fnv1a64(frame_without_tag, h);
}

inline Bytes encode_mux_frame(const MuxFrame& f, std::uint64_t key) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(f.type));
  w.u64(f.conn);
  w.u32(f.stream);
  w.u64(f.offset);
  w.u16(static_cast<std::uint16_t>(f.payload.size()));
  w.raw(f.payload);
  Bytes out = w.take();
  std::uint64_t tag = mux_tag(key, ByteView(out.data(), out.size()));
  ByteWriter tw;
  tw.u64(tag);
  out.insert(out.end(), tw.data().begin(), tw.data().end());
  return out;
}

/// Returns nullopt on truncation or tag mismatch; the caller treats both
/// as datagram loss.
inline std::optional<MuxFrame> decode_mux_frame(ByteView b, std::uint64_t key) {
  if (b.size() < 1 + 8 + 4 + 8 + 2 + 8) return std::nullopt;
  ByteReader r(b);
  MuxFrame f;
  f.type = static_cast<WireType>(r.u8());
  f.conn = r.u64();
  f.stream = r.u32();
  f.offset = r.u64();
  std::uint16_t len = r.u16();
  f.payload = r.raw(len);
  if (!r.ok() || r.remaining() != 8) return std::nullopt;
  std::uint64_t got_tag = r.u64();
  std::uint64_t want = mux_tag(key, b.first(b.size() - 8));
  if (got_tag != want) return std::nullopt;
  return f;
}

// --- the transport system ----------------------------------------------------

/// Backend-agnostic listener/connection/stream layer over the netsim
/// datagram fabric. Two backends share one API: PlainStream (TCP
/// semantics: one implicit stream, SYN/SYN-ACK handshake) and SecureMux
/// (QUIC semantics: 1-RTT certificate handshake, stream multiplexing,
/// per-frame integrity tags). Both retransmit lost segments on a timer:
/// RTO = 3 x link one-way delay (min 100 ms virtual), doubling per retry,
/// five retries before the connection is closed.
///
/// The emulation keeps experiments in deterministic virtual time. The seam
/// for slotting a real stack over OS sockets later is this class's public
/// surface: protocol drivers see nothing below it.
class TransportSystem {
 public:
  explicit TransportSystem(sim::Simulator& s) : sim_(s) {}

  TransportSystem(const TransportSystem&) = delete;
  TransportSystem& operator=(const TransportSystem&) = delete;

  static constexpr int kMaxRetries = 5;
  static constexpr sim::TimeUs kMinRtoUs = 100 * sim::kMicrosPerMilli;

  void set_stream_limit(std::uint32_t n) { stream_limit_ = n; }

  // --- listeners ------------------------------------------------------------

  ListenerHandle open_listener(const EndpointAddress& addr, TransportKind kind,
                               std::optional<SecurityConfig> sec, EventSink sink) {
    if (kind == TransportKind::SecureMux && !sec)
      fail(Errc::MissingSecurityConfig, "SecureMux listener requires a SecurityConfig");
    NodeState& ns = node(addr.node);
    auto key = std::make_pair(addr.port, kind);
    if (ns.listeners.count(key))
      fail(Errc::AddressInUse, "port " + std::to_string(addr.port) + "/" + kind_name(kind) +
                                   " already bound on " + sim_.node_name(addr.node));
    ns.listeners[key] = Listener{std::move(sec), std::move(sink)};
    return ListenerHandle{addr.node, addr.port, kind};
  }

  // --- connections ----------------------------------------------------------

  ConnRef dial(sim::NodeId local, const EndpointAddress& remote, TransportKind kind,
               std::optional<SecurityConfig> sec, EventSink sink) {
    if (kind == TransportKind::SecureMux && !sec)
      fail(Errc::MissingSecurityConfig, "SecureMux dial requires a SecurityConfig");
    sim::LinkId link = sim_.link_between(local, remote.node);
    NodeState& ns = node(local);
    ConnId id = next_conn_id_++;
    Conn& c = ns.conns[id];
    c.id = id;
    c.kind = kind;
    c.local = local;
    c.remote = remote.node;
    c.remote_port = remote.port;
    c.link = link;
    c.dialer = true;
    c.sec = std::move(sec);
    c.sink = std::move(sink);
    c.rto_us = rto_for(link);
    if (kind == TransportKind::SecureMux) c.local_nonce = sim_.rng().next_u64();
    c.hello_wire = hello_wire(c);
    send_wire(c, c.hello_wire);
    arm_handshake_timer(c);
    return ConnRef{local, id};
  }

  StreamId open_stream(const ConnRef& ref) {
    Conn& c = conn(ref);
    if (c.state != ConnState::Established)
      fail(Errc::NotEstablished, "open_stream on non-established connection");
    if (c.kind == TransportKind::PlainStream) {
      ensure_stream(c, 0);
      return 0;  // single implicit stream, idempotent
    }
    if (count_locally_opened(c) >= stream_limit_)
      fail(Errc::StreamLimitExceeded, "stream limit " + std::to_string(stream_limit_));
    // Dialer-opened streams count up from 0; acceptor-opened from 2^31.
    StreamId id = c.dialer ? c.next_stream_id++ : (0x80000000u | c.next_stream_id++);
    ensure_stream(c, id);
    return id;
  }

  std::size_t stream_send(const ConnRef& ref, StreamId stream, ByteView payload) {
    Conn& c = conn(ref);
    if (c.state == ConnState::Closed) fail(Errc::ConnectionClosed, "send on closed connection");
    if (c.state != ConnState::Established) fail(Errc::NotEstablished, "send before establishment");
    auto it = c.streams.find(stream);
    if (it == c.streams.end() || !it->second.open)
      fail(Errc::StreamClosed, "send on unknown or closed stream");
    if (payload.empty()) return 0;
    Stream& s = it->second;
    std::size_t sent = 0;
    while (sent < payload.size()) {
      std::size_t n = std::min(kMaxSegmentPayload, payload.size() - sent);
      Segment seg;
      seg.offset = s.send_next;
      seg.bytes.assign(payload.begin() + static_cast<std::ptrdiff_t>(sent),
                       payload.begin() + static_cast<std::ptrdiff_t>(sent + n));
      s.send_next += n;
      s.bytes_sent += n;
      auto ins = s.unacked.emplace(seg.offset, std::move(seg));
      transmit_segment(c, stream, ins.first->second);
      arm_segment_timer(ref, stream, ins.first->first, c.rto_us);
      sent += n;
    }
    return sent;
  }

  /// Idempotent. The peer sees Closed exactly once (delivery is best effort
  /// under loss; both ends also close on retransmission exhaustion).
  void close(const ConnRef& ref, std::uint32_t code, const std::string& text) {
    NodeState& ns = node(ref.node);
    auto it = ns.conns.find(ref.id);
    if (it == ns.conns.end() || it->second.state == ConnState::Closed) return;
    Conn& c = it->second;
    bool can_signal = c.state == ConnState::Established ||
                      (c.kind == TransportKind::PlainStream);
    if (can_signal) {
      if (c.kind == TransportKind::PlainStream) {
        ByteWriter w;
        w.u8(static_cast<std::uint8_t>(WireType::PlainClose));
        w.u64(c.id);
        w.u32(code);
        w.u16(static_cast<std::uint16_t>(text.size()));
        w.raw(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
        send_wire(c, w.take());
      } else {
        MuxFrame f;
        f.type = WireType::MuxClose;
        f.conn = c.id;
        f.stream = code;
        f.payload.assign(text.begin(), text.end());
        send_wire(c, encode_mux_frame(f, c.session_key));
      }
    }
    finish_close(c, CloseInfo{CloseReason::LocalClose, code, text});
  }

  std::optional<std::uint64_t> peer_identity(const ConnRef& ref) const {
    const Conn& c = conn_const(ref);
    if (c.state != ConnState::Established)
      fail(Errc::NotEstablished, "peer_identity before establishment");
    if (c.kind == TransportKind::PlainStream) return std::nullopt;
    return c.peer_fingerprint;
  }

  ConnectionInfo connection(const ConnRef& ref) const {
    const Conn& c = conn_const(ref);
    ConnectionInfo info;
    info.id = c.id;
    info.kind = c.kind;
    info.state = c.state;
    info.local = c.local;
    info.remote = c.remote;
    info.remote_port = c.remote_port;
    info.dialer = c.dialer;
    if (c.kind == TransportKind::SecureMux && c.state == ConnState::Established)
      info.peer_identity = c.peer_fingerprint;
    info.close = c.close_info;
    return info;
  }

  StreamInfo stream(const ConnRef& ref, StreamId id) const {
    const Conn& c = conn_const(ref);
    auto it = c.streams.find(id);
    if (it == c.streams.end()) fail(Errc::StreamClosed, "unknown stream");
    StreamInfo si;
    si.id = id;
    si.bytes_sent = it->second.bytes_sent;
    si.bytes_received = it->second.bytes_received;
    si.open = it->second.open;
    return si;
  }

  // --- raw datagram path (non-transport protocols share the fabric) ---------

  using RawSink = std::function<void(sim::LinkId, sim::NodeId from, const Bytes&)>;

  void set_raw_sink(sim::NodeId n, RawSink sink) { node(n).raw_sink = std::move(sink); }

  void send_raw(sim::NodeId from, sim::LinkId link, ByteView payload) {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(WireType::RawDatagram));
    w.raw(payload);
    sim_.send_datagram(from, link, w.take());
  }

  /// Ensures the node's datagram handler is wired to this system; implicit
  /// on first use, explicit for nodes that only receive.
  void attach(sim::NodeId n) { node(n); }

 private:
  struct Segment {
    std::uint64_t offset = 0;
    Bytes bytes;
    int retries = 0;
    sim::TimerId timer;
  };

  struct Stream {
    std::uint64_t send_next = 0;
    std::uint64_t bytes_sent = 0;
    std::uint64_t acked_upto = 0;
    std::map<std::uint64_t, Segment> unacked;
    std::uint64_t delivered_upto = 0;
    std::uint64_t bytes_received = 0;
    std::map<std::uint64_t, Bytes> reorder;
    bool open = true;
    bool locally_opened = false;
  };

  struct Conn {
    ConnId id = 0;
    TransportKind kind = TransportKind::PlainStream;
    sim::NodeId local = 0;
    sim::NodeId remote = 0;
    std::uint16_t remote_port = 0;
    sim::LinkId link = 0;
    bool dialer = false;
    ConnState state = ConnState::Handshaking;
    CloseInfo close_info;
    std::optional<SecurityConfig> sec;
    std::uint64_t local_nonce = 0;
    std::uint64_t peer_nonce = 0;
    std::uint64_t session_key = 0;
    std::uint64_t peer_fingerprint = 0;
    std::map<StreamId, Stream> streams;
    StreamId next_stream_id = 0;
    Bytes hello_wire;
    int handshake_retries = 0;
    sim::TimerId handshake_timer;
    sim::TimeUs rto_us = kMinRtoUs;
    EventSink sink;
  };

  struct Listener {
    std::optional<SecurityConfig> sec;
    EventSink sink;
  };

  struct NodeState {
    std::map<std::pair<std::uint16_t, TransportKind>, Listener> listeners;
    std::map<ConnId, Conn> conns;
    RawSink raw_sink;
  };

  // --- plumbing --------------------------------------------------------------

  NodeState& node(sim::NodeId n) {
    auto it = nodes_.find(n);
    if (it == nodes_.end()) {
      it = nodes_.emplace(n, NodeState{}).first;
      sim_.set_datagram_handler(
          n, [this, n](sim::LinkId link, sim::NodeId from, const Bytes& data) {
            on_datagram(n, link, from, data);
          });
    }
    return it->second;
  }

  Conn& conn(const ConnRef& ref) {
    auto nit = nodes_.find(ref.node);
    if (nit == nodes_.end()) fail(Errc::UnknownEndpoint, "no transport state on node");
    auto cit = nit->second.conns.find(ref.id);
    if (cit == nit->second.conns.end()) fail(Errc::ConnectionClosed, "unknown connection");
    return cit->second;
  }

  const Conn& conn_const(const ConnRef& ref) const {
    auto nit = nodes_.find(ref.node);
    if (nit == nodes_.end()) fail(Errc::UnknownEndpoint, "no transport state on node");
    auto cit = nit->second.conns.find(ref.id);
    if (cit == nit->second.conns.end()) fail(Errc::ConnectionClosed, "unknown connection");
    return cit->second;
  }

  sim::TimeUs rto_for(sim::LinkId link) const {
    return std::max<sim::TimeUs>(3 * sim_.link(link).one_way_delay_us, kMinRtoUs);
  }

  void send_wire(Conn& c, Bytes wire) { sim_.send_datagram(c.local, c.link, std::move(wire)); }

  std::uint32_t count_locally_opened(const Conn& c) const {
    std::uint32_t n = 0;
    for (const auto& [id, s] : c.streams)
      if (s.locally_opened) ++n;
    return n;
  }

  Stream& ensure_stream(Conn& c, StreamId id) {
    auto it = c.streams.find(id);
    if (it == c.streams.end()) it = c.streams.emplace(id, Stream{}).first;
    it->second.locally_opened = true;
    return it->second;
  }

  void emit(Conn& c, TransportEvent ev) {
    if (c.sink) c.sink(ev);
  }

  // --- handshake --------------------------------------------------------------

  Bytes hello_wire(const Conn& c) const {
    ByteWriter w;
    if (c.kind == TransportKind::PlainStream) {
      w.u8(static_cast<std::uint8_t>(WireType::PlainSyn));
      w.u64(c.id);
      w.u16(c.remote_port);
    } else {
      w.u8(static_cast<std::uint8_t>(WireType::MuxClientHello));
      w.u64(c.id);
      w.u16(c.remote_port);
      w.u64(c.local_nonce);
      w.u64(c.sec->fingerprint());
      w.lp_string(c.sec->identity.subject);
      w.lp_string(c.sec->alpn);
    }
    return w.data();
  }

  void arm_handshake_timer(Conn& c) {
    ConnRef ref{c.local, c.id};
    sim::TimeUs delay = c.rto_us * (sim::TimeUs(1) << c.handshake_retries);
    c.handshake_timer = sim_.set_timer(c.local, c.id, sim_.now() + delay,
                                       [this, ref]() { on_handshake_timer(ref); });
  }

  void on_handshake_timer(const ConnRef& ref) {
    auto nit = nodes_.find(ref.node);
    if (nit == nodes_.end()) return;
    auto cit = nit->second.conns.find(ref.id);
    if (cit == nit->second.conns.end()) return;
    Conn& c = cit->second;
    if (c.state != ConnState::Handshaking) return;
    if (c.handshake_retries >= kMaxRetries) {
      finish_close(c, CloseInfo{CloseReason::HandshakeTimeout, 0, "handshake timed out"});
      return;
    }
    ++c.handshake_retries;
    send_wire(c, c.hello_wire);
    arm_handshake_timer(c);
  }

  // --- reliable delivery -------------------------------------------------------

  void transmit_segment(Conn& c, StreamId stream, const Segment& seg) {
    if (c.kind == TransportKind::PlainStream) {
      ByteWriter w;
      w.u8(static_cast<std::uint8_t>(WireType::PlainData));
      PlainSegment ps{c.id, seg.offset, seg.bytes};
      Bytes body = encode_plain_segment(ps);
      w.raw(body);
      send_wire(c, w.take());
    } else {
      MuxFrame f;
      f.type = WireType::MuxStreamData;
      f.conn = c.id;
      f.stream = stream;
      f.offset = seg.offset;
      f.payload = seg.bytes;
      send_wire(c, encode_mux_frame(f, c.session_key));
    }
  }

  void arm_segment_timer(const ConnRef& ref, StreamId stream, std::uint64_t offset,
                         sim::TimeUs delay) {
    Conn& c = conn(ref);
    sim::TimerId t = sim_.set_timer(ref.node, offset, sim_.now() + delay,
                                    [this, ref, stream, offset]() {
                                      on_segment_timer(ref, stream, offset);
                                    });
    auto sit = c.streams.find(stream);
    if (sit != c.streams.end()) {
      auto uit = sit->second.unacked.find(offset);
      if (uit != sit->second.unacked.end()) uit->second.timer = t;
    }
  }

  void on_segment_timer(const ConnRef& ref, StreamId stream, std::uint64_t offset) {
    auto nit = nodes_.find(ref.node);
    if (nit == nodes_.end()) return;
    auto cit = nit->second.conns.find(ref.id);
    if (cit == nit->second.conns.end()) return;
    Conn& c = cit->second;
    if (c.state != ConnState::Established) return;
    auto sit = c.streams.find(stream);
    if (sit == c.streams.end()) return;
    Stream& s = sit->second;
    auto uit = s.unacked.find(offset);
    if (uit == s.unacked.end()) return;  // acked meanwhile
    Segment& seg = uit->second;
    if (seg.retries >= kMaxRetries) {
      finish_close(c, CloseInfo{CloseReason::RetransmitTimeout, 0,
                                "segment retransmission exhausted"});
      return;
    }
    ++seg.retries;
    transmit_segment(c, stream, seg);
    arm_segment_timer(ref, stream, offset, c.rto_us * (sim::TimeUs(1) << seg.retries));
  }

  void send_ack(Conn& c, StreamId stream, std::uint64_t cum) {
    if (c.kind == TransportKind::PlainStream) {
      ByteWriter w;
      w.u8(static_cast<std::uint8_t>(WireType::PlainAck));
      w.u64(c.id);
      w.u64(cum);
      send_wire(c, w.take());
    } else {
      MuxFrame f;
      f.type = WireType::MuxAck;
      f.conn = c.id;
      f.stream = stream;
      f.offset = cum;
      send_wire(c, encode_mux_frame(f, c.session_key));
    }
  }

  void handle_ack(Conn& c, StreamId stream, std::uint64_t cum) {
    auto sit = c.streams.find(stream);
    if (sit == c.streams.end()) return;
    Stream& s = sit->second;
    s.acked_upto = std::max(s.acked_upto, cum);
    for (auto it = s.unacked.begin(); it != s.unacked.end();) {
      if (it->second.offset + it->second.bytes.size() <= cum) {
        sim_.cancel_timer(it->second.timer);
        it = s.unacked.erase(it);
      } else {
        break;  // map is offset-ordered and delivery is cumulative
      }
    }
  }

  void receive_segment(Conn& c, StreamId stream, std::uint64_t offset, Bytes payload) {
    auto sit = c.streams.find(stream);
    if (sit == c.streams.end()) {
      sit = c.streams.emplace(stream, Stream{}).first;
      emit(c, TransportEvent{TransportEvent::Type::StreamOpened, ConnRef{c.local, c.id},
                             stream, {}, {}});
    }
    Stream& s = sit->second;
    if (offset == s.delivered_upto) {
      deliver(c, stream, s, std::move(payload));
      // Drain any buffered continuation.
      auto rit = s.reorder.find(s.delivered_upto);
      while (rit != s.reorder.end()) {
        Bytes chunk = std::move(rit->second);
        s.reorder.erase(rit);
        deliver(c, stream, s, std::move(chunk));
        rit = s.reorder.find(s.delivered_upto);
      }
    } else if (offset > s.delivered_upto) {
      s.reorder.emplace(offset, std::move(payload));
    }
    // Duplicates (offset < delivered_upto) fall through to the ack below,
    // which is what un-sticks a sender whose earlier ack was lost.
    send_ack(c, stream, s.delivered_upto);
  }

  void deliver(Conn& c, StreamId stream, Stream& s, Bytes payload) {
    s.delivered_upto += payload.size();
    s.bytes_received += payload.size();
    emit(c, TransportEvent{TransportEvent::Type::Data, ConnRef{c.local, c.id}, stream,
                           std::move(payload), {}});
  }

  void finish_close(Conn& c, CloseInfo info) {
    if (c.state == ConnState::Closed) return;
    c.state = ConnState::Closed;
    c.close_info = info;
    sim_.cancel_timer(c.handshake_timer);
    for (auto& [id, s] : c.streams) {
      s.open = false;
      for (auto& [off, seg] : s.unacked) sim_.cancel_timer(seg.timer);
      s.unacked.clear();
    }
    emit(c, TransportEvent{TransportEvent::Type::Closed, ConnRef{c.local, c.id}, 0, {}, info});
  }

  // --- datagram dispatch --------------------------------------------------------

  void on_datagram(sim::NodeId n, sim::LinkId link, sim::NodeId from, const Bytes& data) {
    if (data.empty()) return;
    NodeState& ns = nodes_.at(n);
    WireType wt = static_cast<WireType>(data[0]);
    ByteView body(data.data() + 1, data.size() - 1);
    switch (wt) {
      case WireType::PlainSyn: on_plain_syn(n, ns, link, from, body); break;
      case WireType::PlainSynAck: on_plain_synack(ns, body); break;
      case WireType::PlainReset: on_plain_reset(ns, body); break;
      case WireType::PlainData: on_plain_data(ns, body); break;
      case WireType::PlainAck: on_plain_ack(ns, body); break;
      case WireType::PlainClose: on_plain_close(ns, body); break;
      case WireType::MuxClientHello: on_mux_client_hello(n, ns, link, from, body); break;
      case WireType::MuxServerHello: on_mux_server_hello(ns, body); break;
      case WireType::MuxReject: on_mux_reject(ns, body); break;
      case WireType::MuxStreamData:
      case WireType::MuxAck:
      case WireType::MuxClose: on_mux_frame(ns, data); break;
      case WireType::RawDatagram:
        if (ns.raw_sink) ns.raw_sink(link, from, Bytes(body.begin(), body.end()));
        break;
      default:
         log(LogLevel::Debug, "unknown wire type 0x%02x dropped", data[0]);
    }
  }

  void reply_plain_reset(sim::NodeId n, sim::LinkId link, ConnId id, CloseReason reason) {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(WireType::PlainReset));
    w.u64(id);
    w.u8(static_cast<std::uint8_t>(reason));
    sim_.send_datagram(n, link, w.take());
  }

  void on_plain_syn(sim::NodeId n, NodeState& ns, sim::LinkId link, sim::NodeId from,
                    ByteView body) {
    ByteReader r(body);
    ConnId id = r.u64();
    std::uint16_t port = r.u16();
    if (!r.ok()) return;
    auto reply_synack = [&]() {
      ByteWriter w;
      w.u8(static_cast<std::uint8_t>(WireType::PlainSynAck));
      w.u64(id);
      sim_.send_datagram(n, link, w.take());
    };
    auto cit = ns.conns.find(id);
    if (cit != ns.conns.end()) {
      if (cit->second.state == ConnState::Established) reply_synack();  // dup SYN
      return;
    }
    auto lit = ns.listeners.find(std::make_pair(port, TransportKind::PlainStream));
    if (lit == ns.listeners.end()) {
      reply_plain_reset(n, link, id, CloseReason::ConnectionRefused);
      return;
    }
    Conn& c = ns.conns[id];
    c.id = id;
    c.kind = TransportKind::PlainStream;
    c.local = n;
    c.remote = from;
    c.remote_port = port;
    c.link = link;
    c.dialer = false;
    c.state = ConnState::Established;
    c.rto_us = rto_for(link);
    c.sink = lit->second.sink;
    // Reply before raising events: anything the application sends from its
    // handlers must trail the SYN-ACK on the wire, or the still-handshaking
    // dialer would drop it.
    reply_synack();
    emit(c, TransportEvent{TransportEvent::Type::Accepted, ConnRef{n, id}, 0, {}, {}});
    emit(c, TransportEvent{TransportEvent::Type::Established, ConnRef{n, id}, 0, {}, {}});
  }

  void on_plain_synack(NodeState& ns, ByteView body) {
    ByteReader r(body);
    ConnId id = r.u64();
    if (!r.ok()) return;
    auto cit = ns.conns.find(id);
    if (cit == ns.conns.end()) return;
    Conn& c = cit->second;
    if (c.state != ConnState::Handshaking || !c.dialer) return;
    c.state = ConnState::Established;
    sim_.cancel_timer(c.handshake_timer);
    emit(c, TransportEvent{TransportEvent::Type::Established, ConnRef{c.local, c.id}, 0, {},
                           {}});
  }

  void on_plain_reset(NodeState& ns, ByteView body) {
    ByteReader r(body);
    ConnId id = r.u64();
    CloseReason reason = static_cast<CloseReason>(r.u8());
    if (!r.ok()) return;
    auto cit = ns.conns.find(id);
    if (cit == ns.conns.end()) return;
    Conn& c = cit->second;
    if (c.state != ConnState::Handshaking) return;
    finish_close(c, CloseInfo{reason, 0, "refused by peer"});
  }

  void on_plain_data(NodeState& ns, ByteView body) {
    auto seg = decode_plain_segment(body);
    if (!seg) return;
    auto cit = ns.conns.find(seg->conn);
    if (cit == ns.conns.end() || cit->second.state != ConnState::Established) return;
    receive_segment(cit->second, 0, seg->seq, std::move(seg->payload));
  }

  void on_plain_ack(NodeState& ns, ByteView body) {
    ByteReader r(body);
    ConnId id = r.u64();
    std::uint64_t cum = r.u64();
    if (!r.ok()) return;
    auto cit = ns.conns.find(id);
    if (cit == ns.conns.end() || cit->second.state != ConnState::Established) return;
    handle_ack(cit->second, 0, cum);
  }

  void on_plain_close(NodeState& ns, ByteView body) {
    ByteReader r(body);
    ConnId id = r.u64();
    std::uint32_t code = r.u32();
    std::uint16_t len = r.u16();
    Bytes text = r.raw(len);
    if (!r.ok()) return;
    auto cit = ns.conns.find(id);
    if (cit == ns.conns.end()) return;
    finish_close(cit->second, CloseInfo{CloseReason::PeerClose, code,
                                        std::string(text.begin(), text.end())});
  }

  void reply_mux_reject(sim::NodeId n, sim::LinkId link, ConnId id, CloseReason reason) {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(WireType::MuxReject));
    w.u64(id);
    w.u8(static_cast<std::uint8_t>(reason));
    sim_.send_datagram(n, link, w.take());
  }

  void on_mux_client_hello(sim::NodeId n, NodeState& ns, sim::LinkId link, sim::NodeId from,
                           ByteView body) {
    ByteReader r(body);
    ConnId id = r.u64();
    std::uint16_t port = r.u16();
    std::uint64_t nonce = r.u64();
    std::uint64_t fp = r.u64();
    std::string subject = r.lp_string();
    std::string alpn = r.lp_string();
    if (!r.ok()) return;
    auto cit = ns.conns.find(id);
    if (cit != ns.conns.end()) {
      if (cit->second.state == ConnState::Established && !cit->second.dialer)
        send_wire(cit->second, server_hello_wire(cit->second));  // dup hello
      return;
    }
    auto lit = ns.listeners.find(std::make_pair(port, TransportKind::SecureMux));
    if (lit == ns.listeners.end()) {
      reply_mux_reject(n, link, id, CloseReason::ConnectionRefused);
      return;
    }
    const SecurityConfig& lsec = *lit->second.sec;
    if (lsec.alpn != alpn) {
      reply_mux_reject(n, link, id, CloseReason::AlpnMismatch);
      return;
    }
    if (!lsec.trusts(fp)) {
      reply_mux_reject(n, link, id, CloseReason::UntrustedPeer);
      return;
    }
    Conn& c = ns.conns[id];
    c.id = id;
    c.kind = TransportKind::SecureMux;
    c.local = n;
    c.remote = from;
    c.remote_port = port;
    c.link = link;
    c.dialer = false;
    c.state = ConnState::Established;
    c.rto_us = rto_for(link);
    c.sec = lsec;
    c.local_nonce = sim_.rng().next_u64();
    c.peer_nonce = nonce;
    c.peer_fingerprint = fp;
    c.session_key = mix64(mix64(nonce, c.local_nonce), id);
    c.sink = lit->second.sink;
    // Hello reply goes out before the events fire, same reasoning as the
    // plain SYN-ACK ordering.
    send_wire(c, server_hello_wire(c));
    emit(c, TransportEvent{TransportEvent::Type::Accepted, ConnRef{n, id}, 0, {}, {}});
    emit(c, TransportEvent{TransportEvent::Type::Established, ConnRef{n, id}, 0, {}, {}});
  }

  Bytes server_hello_wire(const Conn& c) const {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(WireType::MuxServerHello));
    w.u64(c.id);
    w.u64(c.local_nonce);
    w.u64(c.sec->fingerprint());
    w.lp_string(c.sec->identity.subject);
    w.lp_string(c.sec->alpn);
    return w.data();
  }

  void on_mux_server_hello(NodeState& ns, ByteView body) {
    ByteReader r(body);
    ConnId id = r.u64();
    std::uint64_t nonce = r.u64();
    std::uint64_t fp = r.u64();
    std::string subject = r.lp_string();
    std::string alpn = r.lp_string();
    if (!r.ok()) return;
    (void)subject;
    auto cit = ns.conns.find(id);
    if (cit == ns.conns.end()) return;
    Conn& c = cit->second;
    if (c.state != ConnState::Handshaking || !c.dialer) return;
    c.peer_nonce = nonce;
    c.session_key = mix64(mix64(c.local_nonce, nonce), id);
    sim_.cancel_timer(c.handshake_timer);
    if (c.sec->alpn != alpn) {
      // Listener side believed the tokens matched only if they did; a
      // mismatching reply still must not establish.
      finish_close(c, CloseInfo{CloseReason::AlpnMismatch, 0, "alpn mismatch"});
      return;
    }
    if (!c.sec->trusts(fp)) {
      MuxFrame f;
      f.type = WireType::MuxClose;
      f.conn = c.id;
      f.payload = Bytes{'u', 'n', 't', 'r', 'u', 's', 't', 'e', 'd'};
      send_wire(c, encode_mux_frame(f, c.session_key));
      finish_close(c, CloseInfo{CloseReason::UntrustedPeer, 0, "peer fingerprint not pinned"});
      return;
    }
    c.peer_fingerprint = fp;
    c.state = ConnState::Established;
    emit(c, TransportEvent{TransportEvent::Type::Established, ConnRef{c.local, c.id}, 0, {},
                           {}});
  }

  void on_mux_reject(NodeState& ns, ByteView body) {
    ByteReader r(body);
    ConnId id = r.u64();
    CloseReason reason = static_cast<CloseReason>(r.u8());
    if (!r.ok()) return;
    auto cit = ns.conns.find(id);
    if (cit == ns.conns.end()) return;
    Conn& c = cit->second;
    if (c.state != ConnState::Handshaking) return;
    finish_close(c, CloseInfo{reason, 0, "rejected during handshake"});
  }

  void on_mux_frame(NodeState& ns, const Bytes& whole) {
    // Peek the connection id to find the key, then verify the tag.
    if (whole.size() < 9) return;
    ByteReader peek(ByteView(whole.data() + 1, 8));
    ConnId id = peek.u64();
    auto cit = ns.conns.find(id);
    if (cit == ns.conns.end()) return;
    Conn& c = cit->second;
    if (c.kind != TransportKind::SecureMux) return;
    if (c.state == ConnState::Closed) return;
    if (c.state == ConnState::Handshaking) return;  // no key agreed yet; treat as loss
    auto f = decode_mux_frame(ByteView(whole.data(), whole.size()), c.session_key);
    if (!f) {
      ++integrity_drops_;
      return;  // corrupt or mis-keyed frame, discarded as loss
    }
    switch (f->type) {
      case WireType::MuxStreamData:
        receive_segment(c, f->stream, f->offset, std::move(f->payload));
        break;
      case WireType::MuxAck:
        handle_ack(c, f->stream, f->offset);
        break;
      case WireType::MuxClose:
        finish_close(c, CloseInfo{CloseReason::PeerClose, f->stream,
                                  std::string(f->payload.begin(), f->payload.end())});
        break;
      default: break;
    }
  }

 public:
  std::uint64_t integrity_drops() const { return integrity_drops_; }

 private:
  sim::Simulator& sim_;
  std::map<sim::NodeId, NodeState> nodes_;
  ConnId next_conn_id_ = 1;
  std::uint32_t stream_limit_ = 64;
  std::uint64_t integrity_drops_ = 0;
};

}  // namespace roq::transport
