#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "roq/errors.hpp"
#include "roq/netsim.hpp"
#include "roq/prefix.hpp"

namespace roq::harness {

struct BgpMeasurement {
  Prefix prefix;
  sim::TimeUs t_injected_us = 0;
  sim::TimeUs t_r2_us = -1;  // -1: never returned (partial run)
  sim::TimeUs t_r3_us = -1;
  bool complete() const { return t_r2_us >= 0 && t_r3_us >= 0; }
  sim::TimeUs latency_us() const { return std::max(t_r2_us, t_r3_us) - t_injected_us; }
};

struct LatencySummary {
  std::size_t count = 0;
  sim::TimeUs p10_us = 0, p50_us = 0, p90_us = 0, p99_us = 0, max_us = 0;
  double mean_us = 0.0;
};

/// Nearest-rank percentile on a sorted copy: deterministic, no
/// interpolation.
inline LatencySummary summarize_latencies(std::vector<sim::TimeUs> v) {
  LatencySummary s;
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  s.count = v.size();
  auto rank = [&](double q) {
    std::size_t r = static_cast<std::size_t>(std::max(1.0, std::ceil(q * static_cast<double>(v.size()))));
    return v[r - 1];
  };
  s.p10_us = rank(0.10);
  s.p50_us = rank(0.50);
  s.p90_us = rank(0.90);
  s.p99_us = rank(0.99);
  s.max_us = v.back();
  long double total = 0;
  for (sim::TimeUs t : v) total += static_cast<long double>(t);
  s.mean_us = static_cast<double>(total / static_cast<long double>(v.size()));
  return s;
}

inline std::string bgp_records_csv(const std::vector<BgpMeasurement>& records) {
  std::ostringstream os;
  os << "prefix,t_injected_us,t_r2_us,t_r3_us,latency_us\n";
  for (const auto& r : records) {
    os << r.prefix.to_string() << ',' << r.t_injected_us << ',' << r.t_r2_us << ','
       << r.t_r3_us << ',';
    if (r.complete()) os << r.latency_us();
    else os << -1;
    os << '\n';
  }
  return os.str();
}

inline std::string summary_csv(const LatencySummary& s) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", s.mean_us);
  std::ostringstream os;
  os << "count,p10_us,p50_us,p90_us,p99_us,max_us,mean_us\n";
  os << s.count << ',' << s.p10_us << ',' << s.p50_us << ',' << s.p90_us << ',' << s.p99_us
     << ',' << s.max_us << ',' << buf << '\n';
  return os.str();
}

/// CDF at 100 evenly spaced quantiles; the last row is always
/// (max latency, 1.00), ready for external plotting.
inline std::string cdf_csv(std::vector<sim::TimeUs> v) {
  std::ostringstream os;
  os << "latency_us,cumulative_fraction\n";
  if (v.empty()) return os.str();
  std::sort(v.begin(), v.end());
  for (int k = 1; k <= 100; ++k) {
    double q = static_cast<double>(k) / 100.0;
    std::size_t r = static_cast<std::size_t>(std::max(1.0, std::ceil(q * static_cast<double>(v.size()))));
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.2f", q);
    os << v[r - 1] << ',' << buf << '\n';
  }
  return os.str();
}

inline std::string ospf_markers_csv(const std::vector<std::pair<std::string, sim::TimeUs>>& m) {
  std::ostringstream os;
  os << "event,t_us\n";
  for (const auto& [k, t] : m) os << k << ',' << t << '\n';
  return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) fail(Errc::IoError, "cannot create " + p.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot open " + path + " for writing");
  out << content;
  if (!out) fail(Errc::IoError, "short write to " + path);
}

/// Reads one summary.csv produced by summary_csv().
inline std::map<std::string, double> read_summary_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open " + path);
  std::string header, values;
  std::getline(in, header);
  std::getline(in, values);
  std::map<std::string, double> out;
  std::istringstream hs(header), vs(values);
  std::string h, v;
  while (std::getline(hs, h, ',') && std::getline(vs, v, ',')) out[h] = std::stod(v);
  return out;
}

/// `roq compare A B`: per-metric ratio table between two summary files.
inline std::string compare_summaries(const std::string& dir_a, const std::string& dir_b) {
  auto a = read_summary_csv(dir_a + "/summary.csv");
  auto b = read_summary_csv(dir_b + "/summary.csv");
  std::ostringstream os;
  os << "metric,a,b,ratio_a_over_b\n";
  for (const auto& [k, va] : a) {
    auto it = b.find(k);
    if (it == b.end() || k == "count") continue;
    char buf[64];
    if (it->second == 0.0) std::snprintf(buf, sizeof(buf), "inf");
    else std::snprintf(buf, sizeof(buf), "%.4f", va / it->second);
    os << k << ',' << va << ',' << it->second << ',' << buf << '\n';
  }
  return os.str();
}

}  // namespace roq::harness
