#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "roq/bgp/message.hpp"
#include "support/generators.hpp"

using namespace roq;
using namespace roq::bgp;

namespace {

// Independent framing oracle: builds the expected wire image from the RFC
// 4271 header rules (16 x 0xFF marker, 16-bit total length, 1-byte type)
// without touching encode_message's internals.
Bytes framed(std::uint8_t type, const Bytes& body) {
  Bytes out(16, 0xFF);
  std::uint16_t len = static_cast<std::uint16_t>(19 + body.size());
  out.push_back(static_cast<std::uint8_t>(len >> 8));
  out.push_back(static_cast<std::uint8_t>(len & 0xFF));
  out.push_back(type);
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

ByteView view(const Bytes& b) { return ByteView(b.data(), b.size()); }

}  // namespace

TEST_CASE("keepalive encodes to exactly marker + 0x0013 + 0x04") {
  Bytes w = encode_message(KeepaliveMsg{});
  CHECK(w == framed(0x04, {}));
  CHECK(w.size() == 19);
}

TEST_CASE("open encodes to type 1, total length 29, body in network order") {
  OpenMsg m;
  m.my_as = 64500;
  m.hold_time_s = 90;
  m.bgp_id = 0x0A000001;
  Bytes w = encode_message(m);
  Bytes body = {0x00, 0x00, 0xFB, 0xF4,   // AS 64500
                0x00, 0x5A,               // hold 90
                0x0A, 0x00, 0x00, 0x01};  // bgp id 10.0.0.1
  CHECK(w == framed(0x01, body));
  CHECK(w.size() == 29);
  auto d = decode_message(view(w));
  REQUIRE(d.status == DecodeStatus::Ok);
  CHECK(std::get<OpenMsg>(d.message) == m);
  CHECK(d.consumed == 29);
}

TEST_CASE("oversized updates are rejected, forcing the caller to split") {
  UpdateMsg m;
  m.attrs = PathAttrs{Origin::Igp, {64500}, 1, std::nullopt};
  for (int i = 0; i < 5000; ++i)
    m.nlri.push_back(Prefix::v4(10, static_cast<std::uint8_t>(i >> 8),
                                static_cast<std::uint8_t>(i & 0xFF), 0, 24));
  CHECK_THROWS_AS(encode_message(m), Error);
}

TEST_CASE("decode is stream-safe over concatenated messages") {
  Bytes stream = encode_message(KeepaliveMsg{});
  Bytes second = encode_message(KeepaliveMsg{});
  stream.insert(stream.end(), second.begin(), second.end());
  auto d1 = decode_message(view(stream));
  REQUIRE(d1.status == DecodeStatus::Ok);
  CHECK(d1.consumed == 19);
  ByteView rest = view(stream).subspan(d1.consumed);
  CHECK(rest.size() == 19);
  auto d2 = decode_message(rest);
  CHECK(d2.status == DecodeStatus::Ok);
  CHECK(d2.consumed == 19);
}

TEST_CASE("partial input reports NeedMoreData") {
  OpenMsg m;
  m.my_as = 1;
  Bytes w = encode_message(m);
  auto d = decode_message(ByteView(w.data(), 10));
  CHECK(d.status == DecodeStatus::NeedMoreData);
  CHECK(d.consumed == 0);
  // Complete header, incomplete body.
  auto d2 = decode_message(ByteView(w.data(), 20));
  CHECK(d2.status == DecodeStatus::NeedMoreData);
}

TEST_CASE("marker corruption is detected even on short input") {
  Bytes w = encode_message(KeepaliveMsg{});
  w[3] = 0x00;
  CHECK(decode_message(view(w)).status == DecodeStatus::BadMarker);
  CHECK(decode_message(ByteView(w.data(), 5)).status == DecodeStatus::BadMarker);
}

TEST_CASE("length and type bounds are enforced") {
  Bytes w = encode_message(KeepaliveMsg{});
  SUBCASE("length below 19") {
    w[16] = 0x00;
    w[17] = 0x12;
    CHECK(decode_message(view(w)).status == DecodeStatus::BadLength);
  }
  SUBCASE("length above 4096") {
    w[16] = 0x10;
    w[17] = 0x01;
    CHECK(decode_message(view(w)).status == DecodeStatus::BadLength);
  }
  SUBCASE("unknown type code") {
    w[18] = 9;
    CHECK(decode_message(view(w)).status == DecodeStatus::UnknownType);
  }
}

TEST_CASE("update with NLRI but no attributes is malformed") {
  // Hand-build: 0 withdrawn, attrs flag 0, 1 nlri.
  Bytes body = {0x00, 0x00, 0x00, 0x00, 0x01, 0x04, 0x08, 0x0A};
  Bytes w = framed(0x02, body);
  CHECK(decode_message(view(w)).status == DecodeStatus::Malformed);
}

TEST_CASE("non-canonical prefix bits on the wire are malformed") {
  // /8 prefix with trailing set bits in its single address byte is fine;
  // craft a /4 whose byte has low bits set.
  Bytes body = {0x00, 0x00, 0x01, 0x00, 0x02, 0x01, 0x00, 0x00, 0x01, 0x04, 0x0F, 0x00, 0x00};
  // withdrawn=0, attrs=1 {origin 0, path len 0, next_hop 0x00000201? ...}
  // Simpler: craft via encoder then corrupt the nlri byte.
  UpdateMsg m;
  m.attrs = PathAttrs{Origin::Igp, {1}, 7, std::nullopt};
  m.nlri.push_back(Prefix::v4(0xF0, 0, 0, 0, 4));
  Bytes w = encode_message(m);
  w[w.size() - 1] = 0xFF;  // nlri address byte now has bits past /4
  CHECK(decode_message(view(w)).status == DecodeStatus::Malformed);
  (void)body;
}

TEST_CASE("round-trip property over seeded random messages") {
  SplitMix64 g(20240601);
  for (int i = 0; i < 2000; ++i) {
    BgpMessage m = testgen::random_bgp_message(g);
    Bytes w = encode_message(m);
    REQUIRE(w.size() >= 19);
    REQUIRE(w.size() <= 4096);
    // Length field equals buffer size.
    CHECK(static_cast<std::size_t>(w[16] << 8 | w[17]) == w.size());
    auto d = decode_message(view(w));
    REQUIRE(d.status == DecodeStatus::Ok);
    CHECK(d.message == m);
    CHECK(d.consumed == w.size());
  }
}

TEST_CASE("encoded_size matches the real encoding for updates") {
  SplitMix64 g(77);
  for (int i = 0; i < 500; ++i) {
    UpdateMsg m;
    std::size_t wd = g.range(0, 30);
    for (std::size_t k = 0; k < wd; ++k) m.withdrawn.push_back(testgen::random_prefix(g));
    m.attrs = testgen::random_attrs(g);
    std::size_t nl = g.range(0, 30);
    for (std::size_t k = 0; k < nl; ++k) m.nlri.push_back(testgen::random_prefix(g));
    CHECK(encoded_size(m) == encode_message(m).size());
  }
}
