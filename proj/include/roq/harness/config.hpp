#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "roq/errors.hpp"

namespace roq::harness {

enum class Protocol : std::uint8_t { Bgp, Ospf };
enum class TransportChoice : std::uint8_t { TcpLike, Quic };

struct LinkConfig {
  std::string a, b;
  std::int64_t delay_ms = 10;
  double loss = 0.0;
  std::size_t mtu = 1500;
  std::uint32_t cost = 10;  // OSPF interface cost
};

struct RibSourceConfig {
  enum class Kind : std::uint8_t { Generate, File } kind = Kind::Generate;
  std::size_t count = 10000;
  std::string path;
};

/// Parsed and validated experiment description. The file format is line
/// oriented: `key value...` pairs, `#` comments, and repeated `node` /
/// `link` entries; see the README for the schema.
struct ExperimentConfig {
  Protocol protocol = Protocol::Bgp;
  TransportChoice transport = TransportChoice::TcpLike;
  bool delegate_acks = false;  // ospf over quic only
  std::uint64_t seed = 1;
  std::int64_t time_cap_s = 300;
  std::optional<RibSourceConfig> rib;
  std::string out;
  std::vector<std::string> nodes;
  std::vector<LinkConfig> links;

  bool has_node(const std::string& name) const {
    for (const auto& n : nodes)
      if (n == name) return true;
    return false;
  }
  bool has_link(const std::string& x, const std::string& y) const {
    for (const auto& l : links)
      if ((l.a == x && l.b == y) || (l.a == y && l.b == x)) return true;
    return false;
  }
};

struct ConfigError {
  int line = 0;  // 0: file-level problem
  std::string message;
};

struct LoadResult {
  std::optional<ExperimentConfig> config;
  std::vector<ConfigError> errors;
  bool ok() const { return config.has_value() && errors.empty(); }
};

namespace detail {

inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) {
    if (tok[0] == '#') break;
    out.push_back(tok);
  }
  return out;
}

inline bool parse_u64(const std::string& s, std::uint64_t& out) {
  if (s.empty()) return false;
  std::uint64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  out = v;
  return true;
}

inline bool parse_double(const std::string& s, double& out) {
  std::istringstream is(s);
  is >> out;
  return !is.fail() && is.eof();
}

}  // namespace detail

/// Strict parse: unknown keys are errors, and every problem is reported
/// with its line number rather than stopping at the first.
inline LoadResult parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::vector<ConfigError> errors;
  auto err = [&](int line, const std::string& m) { errors.push_back({line, m}); };

  bool saw_protocol = false, saw_transport = false, saw_mode = false;
  std::set<std::string> node_set;

  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::vector<std::string> tok = detail::tokenize(line);
    if (tok.empty()) continue;
    const std::string& key = tok[0];

    if (key == "protocol") {
      saw_protocol = true;
      if (tok.size() != 2) { err(lineno, "protocol expects one value"); continue; }
      if (tok[1] == "bgp") cfg.protocol = Protocol::Bgp;
      else if (tok[1] == "ospf") cfg.protocol = Protocol::Ospf;
      else err(lineno, "InvalidValue: protocol must be bgp or ospf");
    } else if (key == "transport") {
      saw_transport = true;
      if (tok.size() != 2) { err(lineno, "transport expects one value"); continue; }
      if (tok[1] == "tcp-like") cfg.transport = TransportChoice::TcpLike;
      else if (tok[1] == "quic") cfg.transport = TransportChoice::Quic;
      else err(lineno, "InvalidValue: transport must be tcp-like or quic");
    } else if (key == "mode") {
      saw_mode = true;
      if (tok.size() != 2) { err(lineno, "mode expects one value"); continue; }
      if (tok[1] == "paper-fidelity") cfg.delegate_acks = false;
      else if (tok[1] == "delegate-acks") cfg.delegate_acks = true;
      else err(lineno, "InvalidValue: mode must be paper-fidelity or delegate-acks");
    } else if (key == "seed") {
      if (tok.size() != 2 || !detail::parse_u64(tok[1], cfg.seed))
        err(lineno, "InvalidValue: seed must be an unsigned integer");
    } else if (key == "time_cap_s") {
      std::uint64_t v = 0;
      if (tok.size() != 2 || !detail::parse_u64(tok[1], v) || v == 0)
        err(lineno, "InvalidValue: time_cap_s must be a positive integer");
      else cfg.time_cap_s = static_cast<std::int64_t>(v);
    } else if (key == "out") {
      if (tok.size() != 2) err(lineno, "out expects one value");
      else cfg.out = tok[1];
    } else if (key == "rib") {
      if (cfg.rib) { err(lineno, "InvalidValue: rib specified twice (file and generator are mutually exclusive)"); continue; }
      if (tok.size() == 3 && tok[1] == "generate") {
        std::uint64_t n = 0;
        if (!detail::parse_u64(tok[2], n) || n == 0)
          err(lineno, "InvalidValue: rib generate expects a positive count");
        else cfg.rib = RibSourceConfig{RibSourceConfig::Kind::Generate, static_cast<std::size_t>(n), ""};
      } else if (tok.size() == 3 && tok[1] == "file") {
        cfg.rib = RibSourceConfig{RibSourceConfig::Kind::File, 0, tok[2]};
      } else {
        err(lineno, "rib expects 'generate <count>' or 'file <path>'");
      }
    } else if (key == "node") {
      if (tok.size() != 2) { err(lineno, "node expects one name"); continue; }
      if (!node_set.insert(tok[1]).second) err(lineno, "duplicate node " + tok[1]);
      else cfg.nodes.push_back(tok[1]);
    } else if (key == "link") {
      if (tok.size() < 3) { err(lineno, "link expects two endpoints"); continue; }
      LinkConfig l;
      l.a = tok[1];
      l.b = tok[2];
      bool bad = false;
      for (std::size_t i = 3; i < tok.size(); ++i) {
        std::size_t eq = tok[i].find('=');
        if (eq == std::string::npos) { err(lineno, "link option '" + tok[i] + "' is not key=value"); bad = true; continue; }
        std::string k = tok[i].substr(0, eq), v = tok[i].substr(eq + 1);
        std::uint64_t u = 0;
        double d = 0;
        if (k == "delay_ms" && detail::parse_u64(v, u) && u > 0) l.delay_ms = static_cast<std::int64_t>(u);
        else if (k == "loss" && detail::parse_double(v, d) && d >= 0.0 && d <= 1.0) l.loss = d;
        else if (k == "mtu" && detail::parse_u64(v, u) && u >= 128) l.mtu = static_cast<std::size_t>(u);
        else if (k == "cost" && detail::parse_u64(v, u) && u > 0) l.cost = static_cast<std::uint32_t>(u);
        else { err(lineno, "InvalidValue: link option " + tok[i]); bad = true; }
      }
      if (!node_set.count(l.a)) { err(lineno, "UnknownEndpoint: " + l.a + " not declared before link"); bad = true; }
      if (!node_set.count(l.b)) { err(lineno, "UnknownEndpoint: " + l.b + " not declared before link"); bad = true; }
      if (l.a == l.b) { err(lineno, "InvalidValue: self link"); bad = true; }
      if (cfg.has_link(l.a, l.b)) { err(lineno, "duplicate link " + l.a + " " + l.b); bad = true; }
      if (!bad) cfg.links.push_back(l);
    } else {
      err(lineno, "UnknownField: " + key);
    }
  }

  // Cross-field validation.
  if (!saw_protocol) err(0, "protocol is required");
  if (!saw_transport) err(0, "transport is required");
  if (cfg.protocol == Protocol::Bgp) {
    if (saw_mode) err(0, "InvalidValue: mode applies to ospf only");
    if (!cfg.rib) err(0, "bgp experiments require a rib source");
    for (const char* role : {"injector", "R1", "R2", "R3"})
      if (!cfg.has_node(role)) err(0, std::string("bgp topology requires node ") + role);
    if (cfg.has_node("injector") && cfg.has_node("R1") && cfg.has_node("R2") &&
        cfg.has_node("R3")) {
      if (!cfg.has_link("injector", "R1")) err(0, "missing link injector R1");
      for (auto [x, y] : {std::make_pair("R1", "R2"), std::make_pair("R1", "R3"),
                          std::make_pair("R2", "R3")})
        if (!cfg.has_link(x, y)) err(0, std::string("missing link ") + x + " " + y);
    }
  } else {
    if (cfg.rib) err(0, "InvalidValue: rib applies to bgp only");
    if (cfg.delegate_acks && cfg.transport != TransportChoice::Quic)
      err(0, "InvalidValue: delegate-acks requires transport quic");
    if (cfg.nodes.size() < 2) err(0, "ospf topology needs at least two nodes");
  }

  LoadResult r;
  r.errors = std::move(errors);
  if (r.errors.empty()) r.config = std::move(cfg);
  return r;
}

inline LoadResult load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    LoadResult r;
    r.errors.push_back({0, "ParseError: cannot open " + path});
    return r;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace roq::harness
