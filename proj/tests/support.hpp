// Shared fixtures and independent oracles for the test suites.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "psap/model.hpp"
#include "psap/report.hpp"
#include "psap/roadnet.hpp"
#include "psap/simulator.hpp"

namespace testing {

using namespace psap;

// Floyd-Warshall over the raw edge list; shares no code with the library's
// shortest path search.
struct AllPairs {
  std::size_t n = 0;
  std::vector<double> d;
  double operator()(NodeId a, NodeId b) const {
    return d[static_cast<std::size_t>(a) * n + static_cast<std::size_t>(b)];
  }
};

inline AllPairs floyd(const RoadNetwork& net) {
  AllPairs ap;
  ap.n = net.node_count();
  const double inf = std::numeric_limits<double>::infinity();
  ap.d.assign(ap.n * ap.n, inf);
  for (std::size_t k = 0; k < ap.n; ++k) ap.d[k * ap.n + k] = 0.0;
  for (const auto& e : net.edges()) {
    auto& ab = ap.d[static_cast<std::size_t>(e.from) * ap.n + static_cast<std::size_t>(e.to)];
    ab = std::min(ab, e.length_km);
    if (e.bidirectional) {
      auto& ba = ap.d[static_cast<std::size_t>(e.to) * ap.n + static_cast<std::size_t>(e.from)];
      ba = std::min(ba, e.length_km);
    }
  }
  for (std::size_t k = 0; k < ap.n; ++k)
    for (std::size_t i = 0; i < ap.n; ++i) {
      const double ik = ap.d[i * ap.n + k];
      if (ik == inf) continue;
      for (std::size_t j = 0; j < ap.n; ++j) {
        const double c = ik + ap.d[k * ap.n + j];
        if (c < ap.d[i * ap.n + j]) ap.d[i * ap.n + j] = c;
      }
    }
  return ap;
}

// Nodes 0..n-1 on the x axis, one unit apart.
inline RoadNetwork line_network(int n, double step = 1.0) {
  std::vector<std::int64_t> ids;
  std::vector<Point> pos;
  std::vector<Edge> edges;
  for (int k = 0; k < n; ++k) {
    ids.push_back(k);
    pos.push_back({k * step, 0.0});
    if (k > 0) edges.push_back({k, k - 1, k, step, true});
  }
  return RoadNetwork(ids, pos, edges);
}

inline Request make_request(const RoadNetwork& net, RequestId id, NodeId o, NodeId d, double t = 0.0,
                            int n = 1) {
  Request r;
  r.id = id;
  r.external_id = id;
  r.passengers = n;
  r.t = t;
  r.origin = o;
  r.destination = d;
  r.direct_km = net.shortest_dist(o, d);
  return r;
}

// Uniform O/D over all nodes, arrival times uniform over [0, horizon).
inline std::vector<Request> random_requests(const RoadNetwork& net, int count, double horizon,
                                            std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(net.node_count() - 1));
  std::uniform_real_distribution<double> ut(0.0, horizon);
  std::vector<double> times(static_cast<std::size_t>(count));
  for (auto& t : times) t = std::round(ut(gen) * 10.0) / 10.0;
  std::sort(times.begin(), times.end());
  std::vector<Request> out;
  for (int k = 0; k < count; ++k) {
    NodeId o = pick(gen), d = pick(gen);
    while (d == o) d = pick(gen);
    out.push_back(make_request(net, k, o, d, times[static_cast<std::size_t>(k)]));
  }
  return out;
}

// One of the seeded small instances: 10x10 grid, 3-5 vehicles, 20-40
// requests over ten minutes.
struct Instance {
  RoadNetwork net;
  std::vector<Request> requests;
  SimConfig config;
};

inline Instance small_instance(std::uint64_t seed) {
  std::mt19937_64 gen(seed * 7919 + 13);
  auto net = gen_grid(10, 10, 0.5);
  const int vehicles = std::uniform_int_distribution<int>(3, 5)(gen);
  const int count = std::uniform_int_distribution<int>(20, 40)(gen);
  auto reqs = random_requests(net, count, 600.0, gen());
  SimConfig c;
  c.vehicles = vehicles;
  c.seed = seed;
  return {std::move(net), std::move(reqs), c};
}

// Feasibility by walking a stop list with oracle distances. Mirrors the
// detour and buffer definitions directly.
inline bool oracle_feasible(const AllPairs& dist, std::span<const Request> reqs, const Vehicle& v,
                            std::span<const Stop> path, bool check_buffer, const SimConfig& cfg) {
  std::vector<double> at(path.size());
  double acc = v.residual_km;
  NodeId prev = v.node;
  for (std::size_t k = 0; k < path.size(); ++k) {
    acc += dist(prev, path[k].node);
    at[k] = acc;
    prev = path[k].node;
  }
  for (const auto& r : reqs) {
    double po = -1, pd = -1;
    for (std::size_t k = 0; k < path.size(); ++k) {
      if (path[k].request != r.id) continue;
      (path[k].kind == StopKind::Origin ? po : pd) = at[k];
    }
    if (pd < 0) continue;
    double ride = 0, buffer = 0;
    if (r.state == RequestState::Onboard) {
      ride = v.odometer_km - r.odometer_at_pickup + pd;
    } else {
      ride = pd - po;
      buffer = r.state == RequestState::Waiting ? v.odometer_km - r.odometer_at_schedule + po : po;
    }
    if (ride / r.direct_km - 1 > cfg.max_detour + 1e-9) return false;
    const bool buffer_applies =
        r.state == RequestState::Unscheduled ? check_buffer
                                             : r.state == RequestState::Waiting && (check_buffer || r.buffer_bounded);
    if (buffer_applies && buffer > cfg.buffer_km + 1e-9) return false;
  }
  return true;
}

inline double oracle_path_length(const AllPairs& dist, NodeId head, std::span<const Stop> path) {
  double acc = 0;
  NodeId prev = head;
  for (const auto& s : path) {
    acc += dist(prev, s.node);
    prev = s.node;
  }
  return acc;
}

// Every report artifact concatenated, for byte comparisons.
inline std::string serialize(const SimReport& r) {
  return report_to_json(r).dump(2) + metrics_csv(r) + counters_csv(r) + requests_outcome_csv(r) +
         assignments_csv(r) + events_jsonl(r);
}

}  // namespace testing
