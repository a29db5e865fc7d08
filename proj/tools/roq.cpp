// roq CLI: run experiments from config files, run the built-in benches,
// generate synthetic RIBs, and compare result directories.
//
// Exit codes: 0 success, 1 validation/usage errors, 2 time-cap/partial.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "roq/roq.hpp"

namespace {

using namespace roq;
using namespace roq::harness;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitPartial = 2;

void print_config_errors(const LoadResult& r) {
  for (const auto& e : r.errors) {
    if (e.line > 0) std::fprintf(stderr, "config:%d: %s\n", e.line, e.message.c_str());
    else std::fprintf(stderr, "config: %s\n", e.message.c_str());
  }
}

int run_bgp(const ExperimentConfig& cfg, const std::string& out_dir) {
  BgpExperimentResult r = run_bgp_experiment(cfg);
  if (r.status == RunStatus::SessionFailed) {
    std::fprintf(stderr, "error: sessions failed to establish within the time cap\n");
    return kExitInvalid;
  }
  if (!out_dir.empty()) emit_bgp_report(r, out_dir);
  LatencySummary s = summarize_latencies(r.complete_latencies());
  std::printf("routes=%zu complete=%zu dropped_datagrams=%llu\n", r.records.size(),
              r.complete_count(), static_cast<unsigned long long>(r.dropped_datagrams));
  std::printf("latency_us p10=%lld p50=%lld p90=%lld p99=%lld max=%lld mean=%.1f\n",
              static_cast<long long>(s.p10_us), static_cast<long long>(s.p50_us),
              static_cast<long long>(s.p90_us), static_cast<long long>(s.p99_us),
              static_cast<long long>(s.max_us), s.mean_us);
  if (!r.loop_free) {
    std::fprintf(stderr, "error: loop-freedom violated\n");
    return kExitInvalid;
  }
  if (r.partial) {
    std::fprintf(stderr, "warning: time cap hit, results are partial\n");
    return kExitPartial;
  }
  return kExitOk;
}

int run_ospf(const ExperimentConfig& cfg, const std::string& out_dir) {
  OspfExperimentResult r = run_ospf_experiment(cfg);
  if (r.status == RunStatus::TimeCap) {
    std::fprintf(stderr, "warning: time cap hit before convergence\n");
    return kExitPartial;
  }
  if (!out_dir.empty()) emit_ospf_report(r, out_dir);
  for (const auto& [k, v] : r.markers())
    std::printf("%s=%lld\n", k.c_str(), static_cast<long long>(v));
  return kExitOk;
}

int dispatch(const ExperimentConfig& cfg, const std::string& out_dir) {
  return cfg.protocol == Protocol::Bgp ? run_bgp(cfg, out_dir) : run_ospf(cfg, out_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"roq: BGP and OSPF over pluggable transports in simulated time"};
  app.require_subcommand(1);

  // --- run --------------------------------------------------------------
  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  std::string run_config;
  std::uint64_t run_seed = 0;
  bool run_seed_set = false;
  std::string run_out;
  run->add_option("--config", run_config, "experiment config path")->required();
  run->add_option("--seed", run_seed, "override the config seed")
      ->each([&](const std::string&) { run_seed_set = true; });
  run->add_option("--out", run_out, "output directory for CSV reports");

  // --- bench ------------------------------------------------------------
  auto* bench = app.add_subcommand("bench", "built-in experiment topologies");
  bench->require_subcommand(1);

  auto* tri = bench->add_subcommand("bgp-triangle", "the four-router BGP measurement");
  std::string tri_transport = "tcp";
  std::size_t tri_routes = 10000;
  std::uint64_t tri_seed = 1;
  std::int64_t tri_delay = 10;
  double tri_loss = 0.0;
  std::string tri_out;
  tri->add_option("--transport", tri_transport, "tcp | quic")
      ->check(CLI::IsMember({"tcp", "quic"}));
  tri->add_option("--routes", tri_routes, "generated route count");
  tri->add_option("--seed", tri_seed, "rng seed");
  tri->add_option("--delay-ms", tri_delay, "per-link one-way delay");
  tri->add_option("--loss", tri_loss, "per-link loss rate")->check(CLI::Range(0.0, 1.0));
  tri->add_option("--out", tri_out, "output directory");

  auto* mesh = bench->add_subcommand("ospf-mesh", "full-mesh OSPF convergence");
  std::string mesh_mode = "native";
  bool mesh_delegate = false;
  std::size_t mesh_nodes = 6;
  std::uint64_t mesh_seed = 1;
  std::int64_t mesh_delay = 10;
  double mesh_loss = 0.0;
  std::string mesh_out;
  mesh->add_option("--mode", mesh_mode, "native | quic")
      ->check(CLI::IsMember({"native", "quic"}));
  mesh->add_flag("--delegate-acks", mesh_delegate,
                 "skip OSPF acks on the reliable stream (quic mode)");
  mesh->add_option("--nodes", mesh_nodes, "mesh size")->check(CLI::Range(2, 16));
  mesh->add_option("--seed", mesh_seed, "rng seed");
  mesh->add_option("--delay-ms", mesh_delay, "per-link one-way delay");
  mesh->add_option("--loss", mesh_loss, "per-link loss rate")->check(CLI::Range(0.0, 1.0));
  mesh->add_option("--out", mesh_out, "output directory");

  // --- gen-rib ----------------------------------------------------------
  auto* gen = app.add_subcommand("gen-rib", "write a synthetic text RIB");
  std::size_t gen_count = 10000;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("--count", gen_count, "route count")->required();
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->add_option("--out", gen_out, "output file")->required();

  // --- compare ----------------------------------------------------------
  auto* cmp = app.add_subcommand("compare", "ratio summary of two result directories");
  std::string cmp_a, cmp_b;
  cmp->add_option("dirA", cmp_a)->required();
  cmp->add_option("dirB", cmp_b)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      LoadResult lr = load_config(run_config);
      if (!lr.ok()) {
        print_config_errors(lr);
        return kExitInvalid;
      }
      ExperimentConfig cfg = *lr.config;
      if (run_seed_set) cfg.seed = run_seed;
      std::string out_dir = !run_out.empty() ? run_out : cfg.out;
      return dispatch(cfg, out_dir);
    }
    if (*tri) {
      ExperimentConfig cfg = bgp_triangle_config(
          tri_transport == "quic" ? TransportChoice::Quic : TransportChoice::TcpLike,
          tri_routes, tri_seed, tri_delay, tri_loss);
      return dispatch(cfg, tri_out);
    }
    if (*mesh) {
      if (mesh_delegate && mesh_mode != "quic") {
        std::fprintf(stderr, "error: --delegate-acks requires --mode quic\n");
        return kExitInvalid;
      }
      ExperimentConfig cfg = ospf_mesh_config(
          mesh_mode == "quic" ? TransportChoice::Quic : TransportChoice::TcpLike,
          mesh_delegate, mesh_nodes, mesh_seed, mesh_delay, mesh_loss);
      return dispatch(cfg, mesh_out);
    }
    if (*gen) {
      write_file(gen_out, format_rib(generate_rib(gen_count, gen_seed)));
      std::printf("wrote %zu routes to %s\n", gen_count, gen_out.c_str());
      return kExitOk;
    }
    if (*cmp) {
      std::printf("%s", compare_summaries(cmp_a, cmp_b).c_str());
      return kExitOk;
    }
  } catch (const roq::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalid;
  }
  return kExitInvalid;
}
