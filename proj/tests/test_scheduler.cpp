#include <random>

#include <doctest.h>

#include "psap/analysis.hpp"
#include "psap/scheduler.hpp"
#include "support.hpp"

using namespace psap;
using testing::make_request;

namespace {

struct Choice {
  RequestId request;
  VehicleId vehicle;
  int i, j;
  double cost;
};

// Brute-force epoch: every vehicle, every (i, j), oracle distances and
// oracle feasibility. State updates go through apply_assignment.
std::vector<Choice> oracle_epoch(const RoadNetwork& net, const testing::AllPairs& dist, WorldState& state,
                                 const SimConfig& cfg, double now) {
  std::vector<RequestId> pending;
  for (const auto& r : state.requests)
    if (r.state == RequestState::Unscheduled && r.t <= now) pending.push_back(r.id);
  std::sort(pending.begin(), pending.end(), [&](RequestId a, RequestId b) {
    const auto& ra = state.requests[static_cast<std::size_t>(a)];
    const auto& rb = state.requests[static_cast<std::size_t>(b)];
    if (ra.t != rb.t) return ra.t < rb.t;
    return a < b;
  });
  std::vector<Choice> out;
  for (RequestId rid : pending) {
    const Request& r = state.requests[static_cast<std::size_t>(rid)];
    const bool bounded = now - r.t <= cfg.wait_threshold_s;
    std::optional<Choice> best;
    for (const auto& v : state.vehicles) {
      int load = r.passengers;
      for (auto q : v.service_list) load += state.requests[static_cast<std::size_t>(q)].passengers;
      if (load > v.capacity) continue;
      const int stops = static_cast<int>(v.path.size());
      const double base = testing::oracle_path_length(dist, v.node, v.path);
      for (int i = 0; i <= stops; ++i)
        for (int j = i + 1; j <= stops + 1; ++j) {
          const auto spliced =
              splice(v.path, {StopKind::Origin, rid, r.origin}, {StopKind::Destination, rid, r.destination}, i, j);
          if (!testing::oracle_feasible(dist, state.requests, v, spliced, bounded, cfg)) continue;
          const double cost = testing::oracle_path_length(dist, v.node, spliced) - base;
          if (!best || cost < best->cost - 1e-9) best = Choice{rid, v.id, i, j, cost};
        }
    }
    if (best) {
      out.push_back(*best);
      Assignment a{rid, best->vehicle, best->i, best->j,
                   classify(best->i, best->j, static_cast<int>(state.vehicles[static_cast<std::size_t>(best->vehicle)].path.size())),
                   best->cost, now, bounded};
      apply_assignment(net, state, cfg, a);
    }
  }
  return out;
}

WorldState idle_fleet(std::vector<NodeId> at, int capacity = 5) {
  WorldState s;
  for (std::size_t k = 0; k < at.size(); ++k) {
    Vehicle v;
    v.id = static_cast<VehicleId>(k);
    v.capacity = capacity;
    v.node = v.prev_node = at[k];
    s.vehicles.push_back(v);
  }
  return s;
}

}  // namespace

TEST_CASE("furthest_psa") {
  SUBCASE("idle vehicle") {
    auto net = gen_grid(3, 3, 1.0);
    Vehicle v;
    CHECK(furthest_psa(net, {}, v, 6, 0.2).empty());
  }
  SUBCASE("furthest onboard: D=5, E=4") {
    std::vector<std::int64_t> ids{0, 1};
    std::vector<Point> pos{{0, 0}, {4, 0}};
    std::vector<Edge> edges{{0, 0, 1, 5.0, true}};
    RoadNetwork net(ids, pos, edges);
    std::vector<Request> reqs{make_request(net, 0, 0, 1)};
    reqs[0].state = RequestState::Onboard;
    Vehicle v;
    v.service_list = {0};
    v.path = {{StopKind::Destination, 0, 1}};
    const auto psa = furthest_psa(net, reqs, v, 6, 0.2);
    REQUIRE(std::holds_alternative<SinglePsa>(psa.region));
    const auto& b = std::get<SinglePsa>(psa.region).beta;
    CHECK(b.half_len == doctest::Approx(3.0));
    CHECK(b.half_wid == doctest::Approx(std::sqrt(20.0) / 2));
    CHECK(psa.furthest == 0);
  }
  SUBCASE("furthest waiting, schedule position 7 km from the origin") {
    auto net = testing::line_network(12);
    std::vector<Request> reqs{make_request(net, 0, 7, 9)};
    reqs[0].state = RequestState::Waiting;
    reqs[0].schedule_position = {0, 0};
    Vehicle v;
    v.service_list = {0};
    v.path = {{StopKind::Origin, 0, 7}, {StopKind::Destination, 0, 9}};
    const auto psa = furthest_psa(net, reqs, v, 6, 0.2);
    REQUIRE(std::holds_alternative<UnionPsa>(psa.region));
    CHECK_FALSE(std::get<UnionPsa>(psa.region).alpha);
    CHECK(psa_contains(psa, {8, 0}));
    CHECK_FALSE(psa_contains(psa, {3, 0}));
  }
}

TEST_CASE("gate") {
  const auto beta = *make_psa_rect({0, 0}, {4, 0}, 6);
  const VehiclePsa psa{SinglePsa{beta}, 0};
  const std::vector<Point> path{{4, 0}};
  CHECK(gate(psa, InsertionCase::A, {1, 0}, {3, 1}, path, {0, 0}, 6, GatingMode::Literal));
  CHECK_FALSE(gate(psa, InsertionCase::A, {1, 0}, {9, 1}, path, {0, 0}, 6, GatingMode::Literal));
  CHECK_FALSE(gate(psa, InsertionCase::B, {1, 0}, {3, 1}, path, {0, 0}, 6, GatingMode::Literal));
  CHECK(gate(psa, InsertionCase::B, {1, 0}, {3, 1}, path, {0, 0}, 6, GatingMode::Inclusive));
  CHECK(gate(psa, InsertionCase::B, {1, 0}, {9, 1}, path, {0, 0}, 6, GatingMode::Literal));
  CHECK_FALSE(gate(psa, InsertionCase::B, {-5, 0}, {9, 1}, path, {0, 0}, 6, GatingMode::Inclusive));
  // case C: every path point within the rectangle around (vehicle, o) of sum B
  CHECK(gate(psa, InsertionCase::C, {5, 0}, {9, 9}, path, {0, 0}, 6, GatingMode::Literal));
  CHECK_FALSE(gate(psa, InsertionCase::C, {-5, 0}, {9, 9}, path, {0, 0}, 6, GatingMode::Literal));
  CHECK_FALSE(gate(psa, InsertionCase::C, {0, 7}, {9, 9}, path, {0, 0}, 6, GatingMode::Literal));

  const VehiclePsa idle;
  CHECK(gate(idle, InsertionCase::C, {50, 50}, {9, 9}, {}, {0, 0}, 6, GatingMode::Literal));
  CHECK_FALSE(gate(idle, InsertionCase::A, {0, 0}, {9, 9}, path, {0, 0}, 6, GatingMode::Inclusive));
  CHECK_FALSE(gate(idle, InsertionCase::C, {0, 0}, {9, 9}, path, {0, 0}, 6, GatingMode::Inclusive));
}

TEST_CASE("psap_epoch examples") {
  auto net = gen_grid(4, 4, 1.0);
  SimConfig cfg;
  SUBCASE("no spare capacity") {
    WorldState s = idle_fleet({0}, 1);
    s.requests = {make_request(net, 0, 1, 2), make_request(net, 1, 5, 6, 0, 2)};
    s.requests[0].state = RequestState::Onboard;
    s.requests[0].vehicle = 0;
    s.vehicles[0].service_list = {0};
    s.vehicles[0].path = {{StopKind::Destination, 0, 2}};
    const auto res = psap_epoch(net, s, cfg, 0);
    CHECK(res.assignments.empty());
    CHECK(s.requests[1].state == RequestState::Unscheduled);
    CHECK(res.counters.total_exhaustive() == 0);
  }
  SUBCASE("single idle vehicle gets an append") {
    WorldState s = idle_fleet({0});
    s.requests = {make_request(net, 0, 5, 15)};
    const auto res = psap_epoch(net, s, cfg, 0);
    REQUIRE(res.assignments.size() == 1);
    const auto& a = res.assignments[0];
    CHECK(a.kase == InsertionCase::C);
    CHECK(a.cost == net.shortest_dist(0, 5) + net.shortest_dist(5, 15));
    CHECK(s.requests[0].state == RequestState::Waiting);
    CHECK(s.vehicles[0].path.size() == 2);
    CHECK(std::holds_alternative<UnionPsa>(s.vehicles[0].psa.region));
    CHECK(s.vehicles[0].psa.furthest == 0);
    CHECK_NOTHROW(check_coherence(s.vehicles[0], s.requests));
  }
  SUBCASE("unreleased requests wait") {
    WorldState s = idle_fleet({0});
    s.requests = {make_request(net, 0, 5, 15, 30)};
    CHECK(psap_epoch(net, s, cfg, 20).assignments.empty());
    CHECK(psap_epoch(net, s, cfg, 30).assignments.size() == 1);
  }
  SUBCASE("empty R_u") {
    WorldState s = idle_fleet({0, 3});
    const auto res = es_epoch(net, s, cfg, 0);
    CHECK(res.assignments.empty());
    CHECK(res.counters.total_exhaustive() == 0);
  }
}

TEST_CASE("3x3 grid, shared ride wins") {
  auto net = gen_grid(3, 3, 1.0);
  const auto dist = testing::floyd(net);
  SimConfig cfg;
  cfg.max_detour = 0.5;
  cfg.gating = GatingMode::Inclusive;
  const auto build = [&] {
    WorldState s = idle_fleet({0, 8});
    s.requests = {make_request(net, 0, 1, 5, 0), make_request(net, 1, 2, 5, 0), make_request(net, 2, 0, 2, 5)};
    return s;
  };
  WorldState ps = build(), es = build(), os = build();
  const auto p = psap_epoch(net, ps, cfg, 10);
  const auto e = es_epoch(net, es, cfg, 10);
  const auto o = oracle_epoch(net, dist, os, cfg, 10);
  CHECK(p.assignments == e.assignments);
  REQUIRE(e.assignments.size() == o.size());
  for (std::size_t k = 0; k < o.size(); ++k) {
    CHECK(e.assignments[k].request == o[k].request);
    CHECK(e.assignments[k].vehicle == o[k].vehicle);
    CHECK(e.assignments[k].i == o[k].i);
    CHECK(e.assignments[k].j == o[k].j);
    CHECK(e.assignments[k].cost == doctest::Approx(o[k].cost));
  }
  // at least one vehicle serves two requests
  CHECK(std::any_of(es.vehicles.begin(), es.vehicles.end(), [](const Vehicle& v) { return v.service_list.size() >= 2; }));
}

TEST_CASE("ES and inclusive PSAP agree with the brute-force oracle on random epochs") {
  auto net = gen_grid(6, 6, 0.5);
  const auto dist = testing::floyd(net);
  std::mt19937_64 gen(41);
  std::uniform_int_distribution<NodeId> pick(0, 35);
  for (int trial = 0; trial < 40; ++trial) {
    SimConfig cfg;
    cfg.gating = GatingMode::Inclusive;
    cfg.buffer_km = 2.0 + static_cast<double>(gen() % 4);
    cfg.wait_threshold_s = 60;
    std::vector<NodeId> at{pick(gen), pick(gen), pick(gen)};
    auto reqs = testing::random_requests(net, 12, 120, gen());
    WorldState ps = idle_fleet(at, 3), es = idle_fleet(at, 3), os = idle_fleet(at, 3);
    ps.requests = es.requests = os.requests = reqs;
    // two epochs so later requests see loaded vehicles and some exceed W
    for (double now : {40.0, 120.0}) {
      const auto p = psap_epoch(net, ps, cfg, now);
      const auto e = es_epoch(net, es, cfg, now);
      const auto o = oracle_epoch(net, dist, os, cfg, now);
      REQUIRE(p.assignments == e.assignments);
      REQUIRE(e.assignments.size() == o.size());
      for (std::size_t k = 0; k < o.size(); ++k) {
        CHECK(e.assignments[k].vehicle == o[k].vehicle);
        CHECK(e.assignments[k].i == o[k].i);
        CHECK(e.assignments[k].j == o[k].j);
      }
      CHECK(e.counters.evaluated == e.counters.exhaustive);
      for (std::size_t c = 0; c < 3; ++c) CHECK(p.counters.evaluated[c] <= p.counters.exhaustive[c]);
      CHECK(p.counters.exhaustive == e.counters.exhaustive);
      for (const auto& v : es.vehicles) CHECK_NOTHROW(check_coherence(v, es.requests));
    }
  }
}

TEST_CASE("assignments satisfy QoS") {
  auto net = gen_grid(6, 6, 0.5);
  const auto dist = testing::floyd(net);
  SimConfig cfg;
  cfg.buffer_km = 2.5;
  WorldState s = idle_fleet({0, 20, 35}, 4);
  s.requests = testing::random_requests(net, 15, 60, 99);
  const auto res = es_epoch(net, s, cfg, 60);
  CHECK(!res.assignments.empty());
  for (const auto& v : s.vehicles) {
    for (auto q : v.service_list) {
      const auto& r = s.requests[static_cast<std::size_t>(q)];
      CHECK(current_detour(net, r, v) <= cfg.max_detour + 1e-9);
      if (r.buffer_bounded) CHECK(current_buffer(net, r, v) <= cfg.buffer_km + 1e-9);
    }
    CHECK(testing::oracle_feasible(dist, s.requests, v, v.path, false, cfg));
  }
}

TEST_CASE("pending requests are served in waiting order, ties by id") {
  auto net = gen_grid(4, 4, 1.0);
  SimConfig cfg;
  WorldState s = idle_fleet({0});
  s.requests = {make_request(net, 0, 1, 2, 20), make_request(net, 1, 3, 7, 10),
                make_request(net, 2, 12, 13, 10)};
  std::vector<RequestId> order;
  es_epoch(net, s, cfg, 30, [&](const TrialContext& ctx) { order.push_back(ctx.request.id); });
  CHECK(order == std::vector<RequestId>{1, 2, 0});
}

TEST_CASE("refresh_psa_on_event") {
  auto net = testing::line_network(12);
  SimConfig cfg;
  std::vector<Request> reqs{make_request(net, 0, 1, 3), make_request(net, 1, 2, 6)};
  for (auto& r : reqs) {
    r.state = RequestState::Waiting;
    r.vehicle = 0;
  }
  Vehicle v;
  v.service_list = {0, 1};
  v.path = {{StopKind::Origin, 0, 1}, {StopKind::Origin, 1, 2}, {StopKind::Destination, 0, 3},
            {StopKind::Destination, 1, 6}};
  v.psa = furthest_psa(net, reqs, v, cfg.buffer_km, cfg.max_detour);
  REQUIRE(v.psa.furthest == 1);
  REQUIRE(std::holds_alternative<UnionPsa>(v.psa.region));

  // pickup of a non-furthest request: unchanged
  v.path.erase(v.path.begin());
  reqs[0].state = RequestState::Onboard;
  refresh_psa_on_event(net, reqs, v, 0, PsaEvent::Pickup, cfg);
  CHECK(std::holds_alternative<UnionPsa>(v.psa.region));

  // pickup of the furthest: Union -> Single
  v.path.erase(v.path.begin());
  reqs[1].state = RequestState::Onboard;
  refresh_psa_on_event(net, reqs, v, 1, PsaEvent::Pickup, cfg);
  CHECK(std::holds_alternative<SinglePsa>(v.psa.region));

  // dropoff of a non-furthest: unchanged
  v.path.erase(v.path.begin());
  std::erase(v.service_list, 0);
  reqs[0].state = RequestState::Completed;
  const auto before = v.psa;
  refresh_psa_on_event(net, reqs, v, 0, PsaEvent::Dropoff, cfg);
  CHECK(v.psa.furthest == before.furthest);
  CHECK(std::holds_alternative<SinglePsa>(v.psa.region));

  // dropoff of the last request: Empty
  v.path.clear();
  v.service_list.clear();
  reqs[1].state = RequestState::Completed;
  refresh_psa_on_event(net, reqs, v, 1, PsaEvent::Dropoff, cfg);
  CHECK(v.psa.empty());
}

TEST_CASE("exhaustive counts per trial follow the closed forms") {
  auto net = gen_grid(8, 8, 0.4);
  SimConfig cfg;
  cfg.vehicles = 4;
  auto reqs = testing::random_requests(net, 30, 300, 5);
  WorldState s = idle_fleet({0, 9, 30, 63});
  s.requests = reqs;
  for (double now = 0; now <= 300; now += 30) {
    const TrialObserver obs = [&](const TrialContext& ctx) {
      if (!ctx.result.capacity_ok) return;
      const auto n = candidate_counts(ctx.result.stops + 1);
      long long tally[3] = {0, 0, 0};
      for (int i = 0; i <= ctx.result.stops; ++i)
        for (int j = i + 1; j <= ctx.result.stops + 1; ++j) ++tally[case_index(classify(i, j, ctx.result.stops))];
      CHECK(tally[0] == n.a);
      CHECK(tally[1] == n.b);
      CHECK(tally[2] == n.c);
    };
    psap_epoch(net, s, cfg, now, obs);
  }
}
