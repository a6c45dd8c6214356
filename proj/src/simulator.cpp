#include "psap/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "psap/errors.hpp"
#include "psap/rng.hpp"

namespace psap {

namespace {

constexpr double kArrivalSnapKm = 1e-12;

void fire_stop(const RoadNetwork& net, Vehicle& v, std::vector<Request>& requests, double t,
               const SimConfig& config, std::vector<SimEvent>& out) {
  const Stop stop = v.path.front();
  v.path.erase(v.path.begin());
  Request& r = requests[static_cast<std::size_t>(stop.request)];
  if (stop.kind == StopKind::Origin) {
    r.state = RequestState::Onboard;
    r.pickup_time = t;
    r.odometer_at_pickup = v.odometer_km;
    out.push_back({t, EventKind::Pickup, r.id, v.id});
    refresh_psa_on_event(net, requests, v, r.id, PsaEvent::Pickup, config);
  } else {
    r.state = RequestState::Completed;
    r.dropoff_time = t;
    r.odometer_at_dropoff = v.odometer_km;
    std::erase(v.service_list, r.id);
    out.push_back({t, EventKind::Dropoff, r.id, v.id});
    refresh_psa_on_event(net, requests, v, r.id, PsaEvent::Dropoff, config);
  }
}

}  // namespace

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::RequestRelease: return "release";
    case EventKind::EpochRun: return "epoch";
    case EventKind::Pickup: return "pickup";
    case EventKind::Dropoff: return "dropoff";
  }
  return "?";
}

PoevResult poev_baseline(const RoadNetwork& net, std::span<const Request> requests) {
  PoevResult out;
  for (const auto& r : requests) out.total_km += net.shortest_dist(r.origin, r.destination);
  out.fleet = (static_cast<long long>(requests.size()) + 1) / 2;
  return out;
}

WorldState initial_state(const RoadNetwork& net, std::vector<Request> requests,
                         const SimConfig& config) {
  config.validate();
  if (net.node_count() == 0) throw InputError("network has no nodes");
  WorldState state;
  state.requests = std::move(requests);
  auto gen = make_stream(config.seed, "vehicles");
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(net.node_count() - 1));
  for (int k = 0; k < config.vehicles; ++k) {
    Vehicle v;
    v.id = k;
    v.capacity = config.capacity;
    v.node = v.prev_node = pick(gen);
    state.vehicles.push_back(std::move(v));
  }
  return state;
}

std::vector<SimEvent> advance_vehicle(const RoadNetwork& net, Vehicle& v,
                                      std::vector<Request>& requests, double t0, double dt,
                                      const SimConfig& config) {
  std::vector<SimEvent> events;
  double budget = config.speed_kmh * dt / 3600.0;
  double moved = 0.0;
  const auto now = [&] { return t0 + moved / config.speed_kmh * 3600.0; };

  while (true) {
    if (v.residual_km <= 0.0) {
      while (!v.path.empty() && v.path.front().node == v.node) {
        fire_stop(net, v, requests, now(), config, events);
      }
      if (v.path.empty() || budget <= 0.0) break;
      const NodeId target = v.path.front().node;
      if (v.leg.size() < 2 || v.leg.front() != v.node || v.leg.back() != target) {
        v.leg = net.shortest_path(v.node, target);
      }
      const NodeId next = v.leg[1];
      v.leg.erase(v.leg.begin());
      v.prev_node = v.node;
      v.node = next;
      v.residual_km = *net.arc_length(v.prev_node, next);
    }
    if (budget < v.residual_km - kArrivalSnapKm) {
      v.residual_km -= budget;
      v.odometer_km += budget;
      moved += budget;
      break;
    }
    const double step = v.residual_km;
    budget = std::max(0.0, budget - step);
    v.odometer_km += step;
    moved += step;
    v.residual_km = 0.0;
    v.prev_node = v.node;
  }
  return events;
}

SimReport run(const RoadNetwork& net, std::vector<Request> requests, const SimConfig& config,
              SchedulerKind scheduler, const TrialObserver& observer) {
  WorldState state = initial_state(net, std::move(requests), config);

  SimReport report;
  report.config = config;
  report.scheduler = scheduler;
  report.totals.requests = static_cast<int>(state.requests.size());
  report.totals.poev = poev_baseline(net, state.requests);
  report.totals.all_direct_km = report.totals.poev.total_km;

  std::vector<RequestId> release_order(state.requests.size());
  for (std::size_t k = 0; k < release_order.size(); ++k) release_order[k] = static_cast<RequestId>(k);
  std::stable_sort(release_order.begin(), release_order.end(), [&](RequestId a, RequestId b) {
    return state.requests[static_cast<std::size_t>(a)].t < state.requests[static_cast<std::size_t>(b)].t;
  });
  std::size_t released = 0;
  std::size_t logged = 0;
  int completed = 0;

  for (int k = 0;; ++k) {
    const double now = k * config.epoch_s;
    if (completed == static_cast<int>(state.requests.size())) break;
    if (config.horizon_s && now > *config.horizon_s) break;
    state.clock = now;

    // Releases are logged with their own timestamps as time passes them.
    while (logged < release_order.size() &&
           state.requests[static_cast<std::size_t>(release_order[logged])].t <= now) {
      const auto& r = state.requests[static_cast<std::size_t>(release_order[logged])];
      report.events.push_back({r.t, EventKind::RequestRelease, r.id, -1});
      ++logged;
    }
    while (released < release_order.size() &&
           state.requests[static_cast<std::size_t>(release_order[released])].t <= now) {
      ++released;
    }
    report.events.push_back({now, EventKind::EpochRun, -1, -1});

    const auto result = run_epoch(net, state, config, now, scheduler, observer);
    report.assignments.insert(report.assignments.end(), result.assignments.begin(),
                              result.assignments.end());
    report.totals.counters += result.counters;

    EpochRow row;
    row.epoch = k;
    row.t = now;
    row.counters = result.counters;
    row.assigned = static_cast<int>(result.assignments.size());
    bool any_bounded_pending = false;
    for (std::size_t q = 0; q < released; ++q) {
      const auto& r = state.requests[static_cast<std::size_t>(release_order[q])];
      if (r.state == RequestState::Unscheduled) {
        ++row.unserved;
        any_bounded_pending |= waiting_time(r, now) <= config.wait_threshold_s;
      }
    }
    TrafficSnapshot& snap = row.snapshot;
    snap.fleet = static_cast<int>(state.vehicles.size());
    for (const auto& v : state.vehicles) {
      snap.moving += v.path.empty() ? 0 : 1;
      snap.busy += v.service_list.empty() ? 0 : 1;
      snap.fleet_km += v.odometer_km;
    }
    for (const auto& r : state.requests) {
      if (r.state == RequestState::Onboard) ++snap.onboard;
      if (r.state == RequestState::Completed) snap.completed_direct_km += r.direct_km;
    }
    row.metrics = traffic_metrics(snap);
    if (row.metrics.sharing_rate &&
        (!report.totals.peak_sharing_rate || *row.metrics.sharing_rate > *report.totals.peak_sharing_rate)) {
      report.totals.peak_sharing_rate = row.metrics.sharing_rate;
    }
    report.totals.peak_utilization = std::max(report.totals.peak_utilization, row.metrics.utilization);
    report.epochs.push_back(row);

    // Nothing can change any more: every vehicle idle, all requests
    // released, and the leftovers already past the waiting threshold.
    const bool fleet_idle = std::all_of(state.vehicles.begin(), state.vehicles.end(),
                                        [](const Vehicle& v) { return v.path.empty(); });
    if (fleet_idle && released == release_order.size() && result.assignments.empty() &&
        !any_bounded_pending) {
      break;
    }

    std::vector<SimEvent> fired;
    for (auto& v : state.vehicles) {
      auto ev = advance_vehicle(net, v, state.requests, now, config.epoch_s, config);
      fired.insert(fired.end(), ev.begin(), ev.end());
    }
    while (logged < release_order.size() &&
           state.requests[static_cast<std::size_t>(release_order[logged])].t <= now + config.epoch_s) {
      const auto& r = state.requests[static_cast<std::size_t>(release_order[logged])];
      fired.push_back({r.t, EventKind::RequestRelease, r.id, -1});
      ++logged;
    }
    std::stable_sort(fired.begin(), fired.end(),
                     [](const SimEvent& a, const SimEvent& b) { return a.t < b.t; });
    for (const auto& e : fired) completed += e.kind == EventKind::Dropoff ? 1 : 0;
    report.events.insert(report.events.end(), fired.begin(), fired.end());
    report.totals.end_time = now + config.epoch_s;
  }

  SimTotals& totals = report.totals;
  totals.epochs = static_cast<int>(report.epochs.size());
  for (const auto& v : state.vehicles) {
    report.vehicle_km.push_back(v.odometer_km);
    totals.pv_km += v.odometer_km;
  }
  for (const auto& r : state.requests) {
    RequestOutcome o;
    o.id = r.id;
    o.external_id = r.external_id;
    o.state = r.state;
    o.vehicle = r.vehicle;
    o.t = r.t;
    o.direct_km = r.direct_km;
    o.buffer_bounded = r.buffer_bounded;
    if (r.state != RequestState::Unscheduled) o.schedule_time = r.schedule_time;
    if (r.state == RequestState::Onboard || r.state == RequestState::Completed) {
      o.pickup_time = r.pickup_time;
      o.waiting_s = r.pickup_time - r.t;
      o.buffer_km = r.odometer_at_pickup - r.odometer_at_schedule;
    }
    if (r.state == RequestState::Completed) {
      o.dropoff_time = r.dropoff_time;
      o.travel_s = r.dropoff_time - r.pickup_time;
      o.detour = (r.odometer_at_dropoff - r.odometer_at_pickup) / r.direct_km - 1.0;
      ++totals.completed;
      totals.completed_direct_km += r.direct_km;
    } else if (r.state == RequestState::Unscheduled) {
      ++totals.unserved;
    } else {
      ++totals.incomplete;
    }
    report.requests.push_back(o);
  }
  totals.saved_km = totals.completed_direct_km - totals.pv_km;
  return report;
}

}  // namespace psap
