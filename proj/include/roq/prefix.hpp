#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace roq {

/// An IPv4 or IPv6 network prefix in canonical form: every bit past
/// `length` is zero. Construction goes through make()/parse(), which mask.
struct Prefix {
  enum class Family : std::uint8_t { V4 = 4, V6 = 6 };

  Family family = Family::V4;
  std::uint8_t length = 0;                 // 0..32 (v4) or 0..128 (v6)
  std::array<std::uint8_t, 16> bits{};     // network byte order, zero padded

  static constexpr std::uint8_t max_length(Family f) {
    return f == Family::V4 ? 32 : 128;
  }

  std::uint8_t byte_count() const { return static_cast<std::uint8_t>((length + 7) / 8); }

  /// Masks the address down to `length` bits; the only way bits beyond
  /// the length can be nonzero is by bypassing this.
  static Prefix make(Family f, const std::array<std::uint8_t, 16>& addr, std::uint8_t len) {
    Prefix p;
    p.family = f;
    p.length = len;
    int full = len / 8;
    for (int i = 0; i < full && i < 16; ++i) p.bits[i] = addr[i];
    if (full < 16 && len % 8 != 0)
      p.bits[full] = static_cast<std::uint8_t>(addr[full] & (0xFF << (8 - len % 8)));
    return p;
  }

  static Prefix v4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d,
                   std::uint8_t len) {
    std::array<std::uint8_t, 16> addr{};
    addr[0] = a; addr[1] = b; addr[2] = c; addr[3] = d;
    return make(Family::V4, addr, len);
  }

  bool canonical() const {
    Prefix masked = make(family, bits, length);
    return masked.bits == bits;
  }

  /// Parses "a.b.c.d/len" or an RFC 4291 text IPv6 address with "/len".
  static std::optional<Prefix> parse(std::string_view text);

  std::string to_string() const;

  auto operator<=>(const Prefix&) const = default;
};

namespace detail {

inline std::optional<std::array<std::uint8_t, 16>> parse_v4_addr(std::string_view s) {
  std::array<std::uint8_t, 16> out{};
  int part = 0;
  std::uint32_t acc = 0;
  bool digit_seen = false;
  for (char ch : s) {
    if (ch >= '0' && ch <= '9') {
      acc = acc * 10 + static_cast<std::uint32_t>(ch - '0');
      if (acc > 255) return std::nullopt;
      digit_seen = true;
    } else if (ch == '.') {
      if (!digit_seen || part >= 3) return std::nullopt;
      out[part++] = static_cast<std::uint8_t>(acc);
      acc = 0;
      digit_seen = false;
    } else {
      return std::nullopt;
    }
  }
  if (!digit_seen || part != 3) return std::nullopt;
  out[3] = static_cast<std::uint8_t>(acc);
  return out;
}

inline std::optional<std::array<std::uint8_t, 16>> parse_v6_addr(std::string_view s) {
  // Split on "::" once, then parse 16-bit hex groups on each side.
  std::array<std::uint16_t, 8> groups{};
  int left_count = 0, right_count = 0;
  auto parse_groups = [](std::string_view part, std::uint16_t* out, int max) -> int {
    if (part.empty()) return 0;
    int count = 0;
    std::size_t pos = 0;
    while (pos <= part.size()) {
      std::size_t colon = part.find(':', pos);
      std::string_view tok = part.substr(pos, colon == std::string_view::npos
                                                  ? std::string_view::npos
                                                  : colon - pos);
      if (tok.empty() || tok.size() > 4 || count >= max) return -1;
      std::uint32_t v = 0;
      for (char ch : tok) {
        int d;
        if (ch >= '0' && ch <= '9') d = ch - '0';
        else if (ch >= 'a' && ch <= 'f') d = ch - 'a' + 10;
        else if (ch >= 'A' && ch <= 'F') d = ch - 'A' + 10;
        else return -1;
        v = v << 4 | static_cast<std::uint32_t>(d);
      }
      out[count++] = static_cast<std::uint16_t>(v);
      if (colon == std::string_view::npos) break;
      pos = colon + 1;
      if (pos > part.size()) return -1;
    }
    return count;
  };

  std::size_t dc = s.find("::");
  if (dc != std::string_view::npos) {
    if (s.find("::", dc + 1) != std::string_view::npos) return std::nullopt;
    std::array<std::uint16_t, 8> left{}, right{};
    left_count = parse_groups(s.substr(0, dc), left.data(), 8);
    right_count = parse_groups(s.substr(dc + 2), right.data(), 8);
    if (left_count < 0 || right_count < 0 || left_count + right_count > 7) return std::nullopt;
    for (int i = 0; i < left_count; ++i) groups[i] = left[i];
    for (int i = 0; i < right_count; ++i) groups[8 - right_count + i] = right[i];
  } else {
    left_count = parse_groups(s, groups.data(), 8);
    if (left_count != 8) return std::nullopt;
  }
  std::array<std::uint8_t, 16> out{};
  for (int i = 0; i < 8; ++i) {
    out[i * 2] = static_cast<std::uint8_t>(groups[i] >> 8);
    out[i * 2 + 1] = static_cast<std::uint8_t>(groups[i]);
  }
  return out;
}

}  // namespace detail

inline std::optional<Prefix> Prefix::parse(std::string_view text) {
  std::size_t slash = text.rfind('/');
  if (slash == std::string_view::npos || slash + 1 >= text.size()) return std::nullopt;
  std::string_view addr = text.substr(0, slash);
  std::string_view len_s = text.substr(slash + 1);
  std::uint32_t len = 0;
  for (char ch : len_s) {
    if (ch < '0' || ch > '9') return std::nullopt;
    len = len * 10 + static_cast<std::uint32_t>(ch - '0');
    if (len > 128) return std::nullopt;
  }
  bool v6 = addr.find(':') != std::string_view::npos;
  if (v6) {
    auto a = detail::parse_v6_addr(addr);
    if (!a || len > 128) return std::nullopt;
    return make(Family::V6, *a, static_cast<std::uint8_t>(len));
  }
  auto a = detail::parse_v4_addr(addr);
  if (!a || len > 32) return std::nullopt;
  return make(Family::V4, *a, static_cast<std::uint8_t>(len));
}

inline std::string Prefix::to_string() const {
  std::string out;
  if (family == Family::V4) {
    for (int i = 0; i < 4; ++i) {
      if (i) out += '.';
      out += std::to_string(bits[i]);
    }
  } else {
    // Compress the longest run of zero groups, standard shortest form.
    std::array<std::uint16_t, 8> g{};
    for (int i = 0; i < 8; ++i)
      g[i] = static_cast<std::uint16_t>(bits[i * 2] << 8 | bits[i * 2 + 1]);
    int best_start = -1, best_len = 0;
    for (int i = 0; i < 8;) {
      if (g[i] != 0) { ++i; continue; }
      int j = i;
      while (j < 8 && g[j] == 0) ++j;
      if (j - i > best_len) { best_len = j - i; best_start = i; }
      i = j;
    }
    if (best_len < 2) best_start = -1;
    static const char* hex = "0123456789abcdef";
    auto append_group = [&](std::uint16_t v) {
      char buf[4];
      int n = 0;
      bool started = false;
      for (int s = 12; s >= 0; s -= 4) {
        int d = (v >> s) & 0xF;
        if (d != 0 || started || s == 0) { buf[n++] = hex[d]; started = true; }
      }
      out.append(buf, static_cast<std::size_t>(n));
    };
    for (int i = 0; i < 8;) {
      if (i == best_start) {
        out += "::";
        i += best_len;
        continue;
      }
      if (!out.empty() && out.back() != ':') out += ':';
      append_group(g[i]);
      ++i;
    }
    if (out.empty()) out = "::";
  }
  out += '/';
  out += std::to_string(length);
  return out;
}

}  // namespace roq
