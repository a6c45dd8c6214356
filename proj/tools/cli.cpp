#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "psap/analysis.hpp"
#include "psap/errors.hpp"
#include "psap/report.hpp"
#include "psap/rng.hpp"
#include "psap/simulator.hpp"

namespace psap::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string hex;
  for (unsigned int k = 0; k < len; ++k) hex += fmt::format("{:02x}", md[k]);
  return hex;
}

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open {}", p.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Input file read once: the digest covers exactly the bytes parsed.
struct InputFile {
  fs::path path;
  std::string bytes;
  json manifest() const {
    return {{"path", path.string()}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}};
  }
};

struct NetworkArgs {
  std::string net_dir;
  std::string nodes;
  std::string edges;

  void add(CLI::App* app) {
    app->add_option("--net", net_dir, "directory holding nodes.csv and edges.csv");
    app->add_option("--nodes", nodes, "nodes CSV");
    app->add_option("--edges", edges, "edges CSV");
  }
  std::pair<fs::path, fs::path> paths() const {
    fs::path n = nodes;
    fs::path e = edges;
    if (!net_dir.empty()) {
      if (n.empty()) n = fs::path(net_dir) / "nodes.csv";
      if (e.empty()) e = fs::path(net_dir) / "edges.csv";
    }
    if (n.empty() || e.empty()) throw UsageError("network required: --net DIR or --nodes and --edges");
    return {n, e};
  }
};

struct LoadedNetwork {
  InputFile nodes;
  InputFile edges;
  RoadNetwork net;
};

LoadedNetwork load_net(const NetworkArgs& a) {
  const auto [np, ep] = a.paths();
  InputFile nf{np, read_file(np)};
  InputFile ef{ep, read_file(ep)};
  std::istringstream ns(nf.bytes);
  std::istringstream es(ef.bytes);
  auto net = parse_network(ns, es, np.string(), ep.string());
  return {std::move(nf), std::move(ef), std::move(net)};
}

std::vector<Request> load_reqs(const InputFile& f, const RoadNetwork& net) {
  std::istringstream in(f.bytes);
  return parse_requests(in, net, f.path.string());
}

// ---- gen-grid ----

struct GridArgs {
  int nx = 0;
  int ny = 0;
  double spacing = 0.0;
  std::string out;
};

int gen_grid_cmd(const GridArgs& a, std::ostream& out) {
  if (a.nx < 2 || a.ny < 2) throw UsageError("grid needs at least 2 nodes per side");
  if (!(a.spacing > 0.0)) throw UsageError("spacing must be positive");
  const auto net = gen_grid(a.nx, a.ny, a.spacing);
  write_file_atomic(fs::path(a.out) / "nodes.csv", format_nodes_csv(net));
  write_file_atomic(fs::path(a.out) / "edges.csv", format_edges_csv(net));
  out << fmt::format("wrote {} nodes, {} edges to {}\n", net.node_count(), net.edges().size(), a.out);
  return kOk;
}

// ---- gen-requests ----

struct RequestGenArgs {
  NetworkArgs net;
  long long count = 0;
  std::uint64_t seed = 1;
  double min_e_km = 0.0;
  double horizon_s = 3600.0;
  std::string arrivals = "poisson";
  int passengers = 1;
  std::string out;
};

double max_pairwise_euclid(const RoadNetwork& net, double enough) {
  double best = 0.0;
  for (std::size_t a = 0; a < net.node_count(); ++a) {
    for (std::size_t b = a + 1; b < net.node_count(); ++b) {
      best = std::max(best, euclid(net.position(static_cast<NodeId>(a)),
                                   net.position(static_cast<NodeId>(b))));
      if (best >= enough) return best;
    }
  }
  return best;
}

std::vector<Request> generate_requests(const RoadNetwork& net, const RequestGenArgs& a) {
  if (a.count < 0) throw UsageError("count must be non-negative");
  if (!(a.horizon_s >= 0.0)) throw UsageError("horizon must be non-negative");
  if (a.passengers < 1) throw UsageError("party size must be at least 1");
  if (a.min_e_km < 0.0) throw UsageError("minimum separation must be non-negative");
  if (net.node_count() < 2) throw InputError("network needs at least two nodes");
  if (a.min_e_km > 0.0 && max_pairwise_euclid(net, a.min_e_km) < a.min_e_km) {
    throw InputError(fmt::format("no node pair is at least {} km apart", a.min_e_km));
  }

  const auto n = static_cast<std::size_t>(a.count);
  std::vector<double> times(n);
  if (a.arrivals == "poisson") {
    // Arrival times of a Poisson process given its count over the horizon.
    auto gen = make_stream(a.seed, "arrivals");
    std::uniform_real_distribution<double> u(0.0, a.horizon_s);
    for (auto& t : times) t = u(gen);
    std::sort(times.begin(), times.end());
  } else {
    for (std::size_t k = 0; k < n; ++k) times[k] = a.horizon_s * static_cast<double>(k) / static_cast<double>(n);
  }

  auto gen = make_stream(a.seed, "requests");
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(net.node_count() - 1));
  const long long max_draws = std::max<long long>(1000000, 1000 * a.count);
  long long draws = 0;
  std::vector<Request> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    while (true) {
      if (++draws > max_draws) throw std::runtime_error("too few node pairs satisfy the separation");
      const NodeId o = pick(gen);
      const NodeId d = pick(gen);
      if (o == d || euclid(net.position(o), net.position(d)) < a.min_e_km) continue;
      if (!std::isfinite(net.dist_or_inf(o, d)) || !std::isfinite(net.dist_or_inf(d, o))) continue;
      Request r;
      r.id = static_cast<RequestId>(k);
      r.external_id = static_cast<std::int64_t>(k);
      r.passengers = a.passengers;
      r.t = std::round(times[k] * 1000.0) / 1000.0;
      r.origin = o;
      r.destination = d;
      out.push_back(r);
      break;
    }
  }
  return out;
}

int gen_requests_cmd(const RequestGenArgs& a, std::ostream& out) {
  if (a.arrivals != "poisson" && a.arrivals != "uniform") throw UsageError("arrivals: poisson|uniform");
  const auto loaded = load_net(a.net);
  const auto reqs = generate_requests(loaded.net, a);
  write_file_atomic(a.out, format_requests_csv(reqs, loaded.net));
  out << fmt::format("wrote {} requests to {}\n", reqs.size(), a.out);
  return kOk;
}

// ---- validate ----

int validate_cmd(const NetworkArgs& na, const std::string& requests, std::ostream& out) {
  const auto loaded = load_net(na);
  const auto& net = loaded.net;
  std::vector<NodeId> all(net.node_count());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = static_cast<NodeId>(k);
  out << fmt::format("network: {} nodes, {} edges, bbox area {:.4f} km2, strongly connected: {}\n",
                     net.node_count(), net.edges().size(), net.bbox_area(),
                     net.strongly_connected(all) ? "yes" : "no");
  if (!requests.empty()) {
    const InputFile rf{requests, read_file(requests)};
    const auto reqs = load_reqs(rf, net);
    double lo = INFINITY, hi = -INFINITY, direct = 0.0;
    for (const auto& r : reqs) {
      lo = std::min(lo, r.t);
      hi = std::max(hi, r.t);
      direct += r.direct_km;
    }
    if (reqs.empty()) lo = hi = 0.0;
    out << fmt::format("requests: {}, t in [{}, {}] s, total direct {:.3f} km\n", reqs.size(), lo,
                       hi, direct);
  }
  out << "ok\n";
  return kOk;
}

// ---- simulate / compare ----

struct RunArgs {
  NetworkArgs net;
  std::string requests;
  std::string out;
  std::string scheduler = "psap";
  std::string gating = "literal";
  int pvs = 70;
  int capacity = 5;
  double speed_kmh = 30.0;
  double delta = 0.2;
  double wait_min = 4.0;
  double buffer_km = 6.0;
  double epoch_s = 10.0;
  std::uint64_t seed = 1;
  std::optional<double> horizon_s;
  bool strict_occupancy = false;
  long long harness_trials = 100000;

  void add(CLI::App* app, bool with_scheduler) {
    net.add(app);
    app->add_option("--requests", requests, "requests CSV")->required();
    app->add_option("--out", out, "output directory")->required();
    if (with_scheduler) {
      app->add_option("--scheduler", scheduler, "psap|es")
          ->check(CLI::IsMember({"psap", "es"}))
          ->capture_default_str();
    }
    app->add_option("--gating", gating, "literal|inclusive")
        ->check(CLI::IsMember({"literal", "inclusive"}))
        ->capture_default_str();
    app->add_option("--pvs", pvs, "fleet size")->capture_default_str();
    app->add_option("--capacity", capacity, "seats per vehicle")->capture_default_str();
    app->add_option("--speed-kmh", speed_kmh, "vehicle speed")->capture_default_str();
    app->add_option("--delta", delta, "maximum detour ratio")->capture_default_str();
    app->add_option("--wait-min", wait_min, "waiting threshold, minutes")->capture_default_str();
    app->add_option("--buffer-km", buffer_km, "buffer distance bound")->capture_default_str();
    app->add_option("--epoch-s", epoch_s, "scheduling period")->capture_default_str();
    app->add_option("--seed", seed, "run seed")->capture_default_str();
    app->add_option("--horizon-s", horizon_s, "stop scheduling after this time");
    app->add_flag("--strict-occupancy", strict_occupancy, "check seats stop by stop");
  }

  SimConfig config() const {
    SimConfig c;
    c.max_detour = delta;
    c.wait_threshold_s = wait_min * 60.0;
    c.buffer_km = buffer_km;
    c.capacity = capacity;
    c.speed_kmh = speed_kmh;
    c.epoch_s = epoch_s;
    c.gating = gating == "inclusive" ? GatingMode::Inclusive : GatingMode::Literal;
    c.strict_occupancy = strict_occupancy;
    c.vehicles = pvs;
    c.seed = seed;
    c.horizon_s = horizon_s;
    try {
      c.validate();
    } catch (const InputError& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

json run_manifest(const std::string& command, const RunArgs& a, const SimConfig& config,
                  const LoadedNetwork& net, const InputFile& reqs,
                  const std::vector<std::string>& outputs, const std::vector<std::string>& argv) {
  return {{"tool", "psap"},
          {"version", kVersion},
          {"command", command},
          {"argv", argv},
          {"scheduler", a.scheduler},
          {"seed", config.seed},
          {"config", config_to_json(config)},
          {"inputs", {{"nodes", net.nodes.manifest()}, {"edges", net.edges.manifest()}, {"requests", reqs.manifest()}}},
          {"outputs", outputs}};
}

void write_report_files(const fs::path& dir, const SimReport& report) {
  write_file_atomic(dir / "report.json", report_to_json(report).dump(2) + "\n");
  write_file_atomic(dir / "epochs.csv", metrics_csv(report));
  write_file_atomic(dir / "counters.csv", counters_csv(report));
  write_file_atomic(dir / "outcomes.csv", requests_outcome_csv(report));
  write_file_atomic(dir / "assignments.csv", assignments_csv(report));
  write_file_atomic(dir / "events.jsonl", events_jsonl(report));
}

const std::vector<std::string> kReportFiles = {"report.json", "epochs.csv", "counters.csv",
                                               "outcomes.csv", "assignments.csv", "events.jsonl"};

int simulate_cmd(const RunArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  const SimConfig config = a.config();
  const auto loaded = load_net(a.net);
  const InputFile rf{a.requests, read_file(a.requests)};
  auto reqs = load_reqs(rf, loaded.net);

  const fs::path dir = a.out;
  std::vector<std::string> outputs{(dir / "manifest.json").string()};
  for (const auto& f : kReportFiles) outputs.push_back((dir / f).string());
  write_file_atomic(dir / "manifest.json",
                    run_manifest("simulate", a, config, loaded, rf, outputs, argv).dump(2) + "\n");

  const auto kind = a.scheduler == "es" ? SchedulerKind::Exhaustive : SchedulerKind::Psap;
  const auto report = run(loaded.net, std::move(reqs), config, kind);
  write_report_files(dir, report);

  const auto& t = report.totals;
  out << fmt::format(
      "{}: {} requests, {} completed, {} unserved, {} incomplete; fleet {:.3f} km, direct {:.3f} km, "
      "saved {:.3f} km; candidates {} of {}\n",
      to_string(kind), t.requests, t.completed, t.unserved, t.incomplete, t.pv_km,
      t.completed_direct_km, t.saved_km, t.counters.total_evaluated(), t.counters.total_exhaustive());
  return kOk;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json leg_summary(const SimReport& r) {
  const auto& c = r.totals.counters;
  json cases = json::object();
  const char* names[] = {"A", "B", "C"};
  for (std::size_t k = 0; k < 3; ++k) {
    std::optional<double> psi;
    if (c.exhaustive[k] > 0) {
      psi = static_cast<double>(c.exhaustive[k] - c.evaluated[k]) / static_cast<double>(c.exhaustive[k]);
    }
    cases[names[k]] = {{"M", c.evaluated[k]}, {"N", c.exhaustive[k]}, {"psi", optional_json(psi)}};
  }
  double max_detour = 0.0, max_buffer = 0.0, mean_wait = 0.0;
  int picked = 0;
  for (const auto& o : r.requests) {
    if (o.state == RequestState::Completed) max_detour = std::max(max_detour, o.detour);
    if (o.state == RequestState::Completed || o.state == RequestState::Onboard) {
      if (o.buffer_bounded) max_buffer = std::max(max_buffer, o.buffer_km);
      mean_wait += o.waiting_s;
      ++picked;
    }
  }
  if (picked > 0) mean_wait /= picked;
  const auto& t = r.totals;
  return {{"cases", cases},
          {"evaluated", c.total_evaluated()},
          {"exhaustive", c.total_exhaustive()},
          {"completed", t.completed},
          {"unserved", t.unserved},
          {"incomplete", t.incomplete},
          {"fleet_km", t.pv_km},
          {"completed_direct_km", t.completed_direct_km},
          {"saved_km", t.saved_km},
          {"poev_km", t.poev.total_km},
          {"peak_sharing_rate", optional_json(t.peak_sharing_rate)},
          {"qos", {{"max_detour", max_detour}, {"max_bounded_buffer_km", max_buffer}, {"mean_wait_s", mean_wait}}}};
}

int compare_cmd(const RunArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  const SimConfig config = a.config();
  const auto loaded = load_net(a.net);
  const InputFile rf{a.requests, read_file(a.requests)};
  const auto reqs = load_reqs(rf, loaded.net);

  const fs::path dir = a.out;
  std::vector<std::string> outputs{(dir / "manifest.json").string(), (dir / "summary.json").string()};
  for (const char* leg : {"psap", "es"}) {
    for (const auto& f : kReportFiles) outputs.push_back((dir / leg / f).string());
  }
  write_file_atomic(dir / "manifest.json",
                    run_manifest("compare", a, config, loaded, rf, outputs, argv).dump(2) + "\n");

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const auto psap = run(loaded.net, reqs, config, SchedulerKind::Psap);
  const auto t1 = clock::now();
  const auto es = run(loaded.net, reqs, config, SchedulerKind::Exhaustive);
  const auto t2 = clock::now();
  write_report_files(dir / "psap", psap);
  write_report_files(dir / "es", es);

  std::optional<std::size_t> first_diff;
  const std::size_t common = std::min(psap.assignments.size(), es.assignments.size());
  std::size_t differing = std::max(psap.assignments.size(), es.assignments.size()) - common;
  for (std::size_t k = 0; k < common; ++k) {
    if (!(psap.assignments[k] == es.assignments[k])) {
      ++differing;
      if (!first_diff) first_diff = k;
    }
  }
  if (!first_diff && psap.assignments.size() != es.assignments.size()) first_diff = common;

  const auto [lo, hi] = loaded.net.bbox();
  json harness = json::array();
  for (double f : {0.1, 0.3, 0.5}) {
    const auto h = rrcc_harness(lo, hi, f, a.harness_trials, GatingMode::Inclusive,
                                config.seed);
    harness.push_back({{"area_fraction", f},
                       {"trials", h.trials},
                       {"psi_A", h.psi_a},
                       {"psi_B", h.psi_b},
                       {"expected_psi_A", h.expected.psi_a},
                       {"expected_psi_B", h.expected.psi_b}});
  }

  const json summary = {
      {"gating", std::string(to_string(config.gating))},
      {"psap", leg_summary(psap)},
      {"es", leg_summary(es)},
      {"assignment_diff",
       {{"psap", psap.assignments.size()},
        {"es", es.assignments.size()},
        {"differing", differing},
        {"first_difference", first_diff ? json(*first_diff) : json(nullptr)}}},
      {"harness", {{"gating", "inclusive"}, {"rows", harness}}}};
  write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");

  const auto secs = [](auto d) { return std::chrono::duration<double>(d).count(); };
  out << fmt::format("{:<6}{:>12}{:>12}{:>12}{:>12}{:>10}\n", "case", "M psap", "N psap", "M es",
                     "N es", "psi");
  for (const char* c : {"A", "B", "C"}) {
    const auto& p = summary["psap"]["cases"][c];
    const auto& e = summary["es"]["cases"][c];
    const std::string psi = p["psi"].is_null() ? "-" : fmt::format("{:.4f}", p["psi"].get<double>());
    out << fmt::format("{:<6}{:>12}{:>12}{:>12}{:>12}{:>10}\n", c, p["M"].get<long long>(),
                       p["N"].get<long long>(), e["M"].get<long long>(), e["N"].get<long long>(), psi);
  }
  out << fmt::format("evaluated: psap {} / es {}\n", summary["psap"]["evaluated"].get<long long>(),
                     summary["es"]["evaluated"].get<long long>());
  out << fmt::format("wall time: psap {:.3f} s, es {:.3f} s (informational)\n", secs(t1 - t0),
                     secs(t2 - t1));
  out << fmt::format("assignments: psap {}, es {}, differing {}\n", psap.assignments.size(),
                     es.assignments.size(), differing);
  for (const auto* leg : {"psap", "es"}) {
    const auto& q = summary[leg]["qos"];
    out << fmt::format("qos {}: max detour {:.4f}, max bounded buffer {:.3f} km, mean wait {:.1f} s\n",
                       leg, q["max_detour"].get<double>(), q["max_bounded_buffer_km"].get<double>(),
                       q["mean_wait_s"].get<double>());
  }
  out << "controlled harness (frozen PSA, uniform O/D):\n";
  for (const auto& h : harness) {
    out << fmt::format("  A/S={:.1f}: psi_A {:.4f} (expect {:.4f}), psi_B {:.4f} (expect {:.4f})\n",
                       h["area_fraction"].get<double>(), h["psi_A"].get<double>(),
                       h["expected_psi_A"].get<double>(), h["psi_B"].get<double>(),
                       h["expected_psi_B"].get<double>());
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"PSA-pruned ride-sharing dispatch simulator"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GridArgs grid;
  auto* g = app.add_subcommand("gen-grid", "write a square-lattice road network");
  g->add_option("--nx", grid.nx, "nodes along x")->required();
  g->add_option("--ny", grid.ny, "nodes along y")->required();
  g->add_option("--spacing-km", grid.spacing, "edge length")->required();
  g->add_option("--out", grid.out, "output directory")->required();

  RequestGenArgs rg;
  auto* r = app.add_subcommand("gen-requests", "sample requests over a network");
  rg.net.add(r);
  r->add_option("--count", rg.count, "number of requests")->required();
  r->add_option("--seed", rg.seed)->capture_default_str();
  r->add_option("--min-e-km", rg.min_e_km, "minimum straight-line O/D separation")->capture_default_str();
  r->add_option("--horizon-s", rg.horizon_s, "arrival window")->capture_default_str();
  r->add_option("--arrivals", rg.arrivals,
                "poisson (random times over the window) or uniform (evenly spaced)")
      ->check(CLI::IsMember({"poisson", "uniform"}))
      ->capture_default_str();
  r->add_option("--n", rg.passengers, "party size")->capture_default_str();
  r->add_option("--out", rg.out, "requests CSV")->required();

  NetworkArgs vnet;
  std::string vreq;
  auto* v = app.add_subcommand("validate", "check network and request files");
  vnet.add(v);
  v->add_option("--requests", vreq, "requests CSV");

  RunArgs sim;
  auto* s = app.add_subcommand("simulate", "run one scheduler and write reports");
  sim.add(s, true);

  RunArgs cmp;
  auto* c = app.add_subcommand("compare", "run PSAP and ES on the same inputs");
  cmp.add(c, false);
  c->add_option("--harness-trials", cmp.harness_trials, "samples per controlled-harness row")
      ->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (g->parsed()) return gen_grid_cmd(grid, out);
    if (r->parsed()) return gen_requests_cmd(rg, out);
    if (v->parsed()) return validate_cmd(vnet, vreq, out);
    if (s->parsed()) return simulate_cmd(sim, args, out);
    if (c->parsed()) return compare_cmd(cmp, args, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const NoPathError& e) {
    err << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}

}  // namespace psap::cli
