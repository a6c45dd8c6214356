#include <random>

#include <doctest.h>

#include "psap/simulator.hpp"
#include "support.hpp"

using namespace psap;
using testing::make_request;

namespace {

// Vehicle at `head` with an already planned list of waiting requests.
struct Planned {
  std::vector<Request> reqs;
  Vehicle v;
};

Planned planned(const RoadNetwork& net, NodeId head, const std::vector<std::pair<NodeId, NodeId>>& trips) {
  Planned p;
  p.v.node = p.v.prev_node = head;
  for (const auto& [o, d] : trips) {
    const auto id = static_cast<RequestId>(p.reqs.size());
    p.reqs.push_back(make_request(net, id, o, d));
    p.reqs.back().state = RequestState::Waiting;
    p.reqs.back().vehicle = 0;
    p.v.service_list.push_back(id);
    p.v.path.push_back({StopKind::Origin, id, o});
    p.v.path.push_back({StopKind::Destination, id, d});
  }
  return p;
}

}  // namespace

TEST_CASE("advance_vehicle examples") {
  auto line = testing::line_network(10, 0.1);
  SimConfig cfg;

  SUBCASE("idle vehicle does not move") {
    Vehicle v;
    v.node = v.prev_node = 3;
    std::vector<Request> none;
    CHECK(advance_vehicle(line, v, none, 0, 60, cfg).empty());
    CHECK(v.odometer_km == 0.0);
    CHECK(v.node == 3);
  }
  SUBCASE("0.5 km in 60 s reaches the stop exactly") {
    auto p = planned(line, 0, {{5, 9}});
    const auto ev = advance_vehicle(line, p.v, p.reqs, 100, 60, cfg);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].kind == EventKind::Pickup);
    CHECK(ev[0].t == doctest::Approx(160));
    CHECK(p.v.odometer_km == doctest::Approx(0.5));
    CHECK(p.reqs[0].state == RequestState::Onboard);
    CHECK(p.reqs[0].pickup_time == doctest::Approx(160));
  }
  SUBCASE("two stops 0.2 km apart in one step") {
    auto p = planned(line, 0, {{1, 3}});
    const auto ev = advance_vehicle(line, p.v, p.reqs, 0, 60, cfg);
    REQUIRE(ev.size() == 2);
    CHECK(ev[0].kind == EventKind::Pickup);
    CHECK(ev[1].kind == EventKind::Dropoff);
    CHECK(ev[0].t == doctest::Approx(12));
    CHECK(ev[1].t == doctest::Approx(36));
    CHECK(p.v.path.empty());
    CHECK(p.v.service_list.empty());
    CHECK(p.v.odometer_km == doctest::Approx(0.3));
    CHECK(p.reqs[0].state == RequestState::Completed);
    CHECK(p.reqs[0].odometer_at_dropoff - p.reqs[0].odometer_at_pickup == doctest::Approx(0.2));
    CHECK(p.v.psa.empty());
  }
  SUBCASE("stop at the current node fires immediately") {
    auto p = planned(line, 2, {{2, 4}});
    const auto ev = advance_vehicle(line, p.v, p.reqs, 7, 0, cfg);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].t == 7);
  }
}

TEST_CASE("one step equals 1 s micro-steps and oracle event times") {
  auto g = gen_grid(8, 8, 0.35);
  const auto dist = testing::floyd(g);
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<NodeId> pick(0, 63);
  SimConfig cfg;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::pair<NodeId, NodeId>> trips;
    for (int k = 0; k < 3; ++k) {
      NodeId o = pick(gen), d = pick(gen);
      while (d == o) d = pick(gen);
      trips.push_back({o, d});
    }
    auto whole = planned(g, pick(gen), trips);
    auto micro = whole;
    // event times along the stop list from oracle distances
    std::vector<double> expect;
    double acc = 0;
    NodeId prev = whole.v.node;
    for (const auto& s : whole.v.path) {
      acc += dist(prev, s.node);
      expect.push_back(acc / cfg.speed_kmh * 3600);
      prev = s.node;
    }
    const double dt = 700;
    const auto a = advance_vehicle(g, whole.v, whole.reqs, 0, dt, cfg);
    std::vector<SimEvent> b;
    for (int s = 0; s < 700; ++s) {
      auto e = advance_vehicle(g, micro.v, micro.reqs, s, 1, cfg);
      b.insert(b.end(), e.begin(), e.end());
    }
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].kind == b[k].kind);
      CHECK(a[k].request == b[k].request);
      CHECK(a[k].t == doctest::Approx(b[k].t).epsilon(1e-9));
      CHECK(a[k].t == doctest::Approx(expect[k]).epsilon(1e-9));
    }
    std::size_t fired = 0;
    while (fired < expect.size() && expect[fired] <= dt - 1e-6) ++fired;
    CHECK(a.size() == fired);
    CHECK(whole.v.odometer_km == doctest::Approx(micro.v.odometer_km).epsilon(1e-9));
    CHECK(std::abs(whole.v.residual_km - micro.v.residual_km) < 1e-6);
    CHECK(whole.v.node == micro.v.node);
    CHECK(whole.v.path == micro.v.path);
    CHECK(whole.v.odometer_km == doctest::Approx(std::min(acc, cfg.speed_kmh * dt / 3600)).epsilon(1e-9));
  }
}

TEST_CASE("poev_baseline") {
  auto line = testing::line_network(10);
  std::vector<Request> two{make_request(line, 0, 0, 3), make_request(line, 1, 2, 7)};
  const auto p = poev_baseline(line, two);
  CHECK(p.total_km == 8.0);
  CHECK(p.fleet == 1);
  CHECK(poev_baseline(line, {}).total_km == 0.0);
  std::vector<Request> many(75014, make_request(line, 0, 0, 1));
  CHECK(poev_baseline(line, many).fleet == 37507);
}

TEST_CASE("single trip timing") {
  // two nodes 3 km apart: whichever end the vehicle starts at, the ride
  // itself takes six minutes
  std::vector<std::int64_t> ids{0, 1};
  std::vector<Point> pos{{0, 0}, {3, 0}};
  std::vector<Edge> edges{{0, 0, 1, 3.0, true}};
  RoadNetwork net(ids, pos, edges);
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    SimConfig cfg;
    cfg.vehicles = 1;
    cfg.seed = seed;
    const auto rep = run(net, {make_request(net, 0, 0, 1)}, cfg, SchedulerKind::Psap);
    REQUIRE(rep.requests[0].state == RequestState::Completed);
    CHECK(rep.requests[0].dropoff_time == doctest::Approx(rep.requests[0].pickup_time + 360));
    CHECK(rep.requests[0].detour == doctest::Approx(0.0));
  }
}

TEST_CASE("zero requests") {
  auto g = gen_grid(3, 3, 1.0);
  SimConfig cfg;
  cfg.vehicles = 2;
  const auto rep = run(g, {}, cfg, SchedulerKind::Psap);
  CHECK(rep.events.empty());
  CHECK(rep.totals.pv_km == 0.0);
  CHECK(rep.totals.requests == 0);
}

TEST_CASE("run invariants on seeded instances") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto inst = testing::small_instance(seed);
    for (auto kind : {SchedulerKind::Psap, SchedulerKind::Exhaustive}) {
      int coherence_checks = 0;
      const TrialObserver obs = [&](const TrialContext& ctx) {
        for (const auto& v : ctx.state.vehicles) check_coherence(v, ctx.state.requests);
        ++coherence_checks;
      };
      const auto rep = run(inst.net, inst.requests, inst.config, kind, obs);
      CHECK(coherence_checks > 0);
      // distance accounting
      double sum = 0;
      for (double km : rep.vehicle_km) sum += km;
      CHECK(sum == rep.totals.pv_km);
      // time order and causality
      for (std::size_t k = 1; k < rep.events.size(); ++k) CHECK(rep.events[k - 1].t <= rep.events[k].t);
      int pickups = 0, dropoffs = 0, releases = 0;
      for (const auto& e : rep.events) {
        pickups += e.kind == EventKind::Pickup;
        dropoffs += e.kind == EventKind::Dropoff;
        releases += e.kind == EventKind::RequestRelease;
      }
      CHECK(releases == static_cast<int>(inst.requests.size()));
      CHECK(dropoffs == rep.totals.completed);
      CHECK(rep.totals.completed + rep.totals.unserved + rep.totals.incomplete == rep.totals.requests);
      for (const auto& o : rep.requests) {
        if (o.state != RequestState::Completed) continue;
        CHECK(o.schedule_time <= o.pickup_time);
        CHECK(o.pickup_time < o.dropoff_time);
        CHECK(o.t <= o.schedule_time);
        CHECK(o.detour <= inst.config.max_detour + 1e-6);
        CHECK(o.detour >= -1e-9);
        if (o.buffer_bounded) CHECK(o.buffer_km <= inst.config.buffer_km + 1e-6);
      }
      CHECK(rep.totals.poev.total_km == doctest::Approx(rep.totals.all_direct_km));
    }
  }
}

TEST_CASE("determinism") {
  auto inst = testing::small_instance(3);
  const auto a = testing::serialize(run(inst.net, inst.requests, inst.config, SchedulerKind::Psap));
  const auto b = testing::serialize(run(inst.net, inst.requests, inst.config, SchedulerKind::Psap));
  CHECK(a == b);
  auto other = inst.config;
  other.seed += 1;
  CHECK(testing::serialize(run(inst.net, inst.requests, other, SchedulerKind::Psap)) != a);
}

TEST_CASE("horizon stops the run") {
  auto inst = testing::small_instance(2);
  inst.config.horizon_s = 100;
  const auto rep = run(inst.net, inst.requests, inst.config, SchedulerKind::Psap);
  CHECK(rep.epochs.back().t <= 100);
  CHECK(rep.totals.end_time <= 110);
}

TEST_CASE("report tables") {
  auto inst = testing::small_instance(4);
  const auto rep = run(inst.net, inst.requests, inst.config, SchedulerKind::Psap);
  const auto metrics = metrics_csv(rep);
  CHECK(metrics.rfind("epoch,t_s,psi_A,psi_B,psi_C,sharing_rate,utilization,saved_km,assigned,unserved\n", 0) == 0);
  CHECK(std::count(metrics.begin(), metrics.end(), '\n') == static_cast<long>(rep.epochs.size() + 1));
  const auto events = events_jsonl(rep);
  CHECK(events.rfind("{\"t\":0.0,\"kind\":\"epoch\",\"req\":null,\"veh\":null}\n", 0) == 0);
  const auto j = report_to_json(rep);
  CHECK(j["config"]["max_detour"] == 0.2);
  CHECK(j["requests"].size() == inst.requests.size());
}
