#include "psap/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "psap/analysis.hpp"

namespace psap {

std::string_view to_string(SchedulerKind k) { return k == SchedulerKind::Psap ? "psap" : "es"; }

EpochCounters& EpochCounters::operator+=(const EpochCounters& o) {
  for (std::size_t k = 0; k < 3; ++k) {
    evaluated[k] += o.evaluated[k];
    exhaustive[k] += o.exhaustive[k];
  }
  return *this;
}

VehiclePsa furthest_psa(const RoadNetwork& net, std::span<const Request> requests, const Vehicle& v,
                        double buffer_km, double max_detour) {
  if (v.path.empty()) return {};
  const Stop& last = v.path.back();
  if (last.kind != StopKind::Destination) {
    throw std::logic_error("path does not end at a destination");
  }
  const Request& r = requests[static_cast<std::size_t>(last.request)];
  const Point o = net.position(r.origin);
  const Point d = net.position(r.destination);
  // D >= E up to the edge-length slack; never let beta collapse to nothing.
  const double beta_sum = std::max((1.0 + max_detour) * r.direct_km, euclid(o, d));
  const PsaRect beta = *make_psa_rect(o, d, beta_sum);

  VehiclePsa psa;
  psa.furthest = r.id;
  if (r.state == RequestState::Onboard) {
    psa.region = SinglePsa{beta};
  } else {
    psa.region = UnionPsa{make_psa_rect(r.schedule_position, o, buffer_km), beta};
  }
  return psa;
}

bool gate(const VehiclePsa& psa, InsertionCase c, Point o, Point d,
          std::span<const Point> path_points, Point vehicle_pos, double buffer_km, GatingMode mode) {
  if (psa.empty() && !path_points.empty()) return false;
  switch (c) {
    case InsertionCase::A:
      return psa_contains(psa, o) && psa_contains(psa, d);
    case InsertionCase::B:
      if (mode == GatingMode::Inclusive) return psa_contains(psa, o);
      return psa_contains(psa, o) && !psa_contains(psa, d);
    case InsertionCase::C: {
      if (path_points.empty()) return true;
      const auto alpha = make_psa_rect(vehicle_pos, o, buffer_km);
      if (!alpha) return false;
      return std::all_of(path_points.begin(), path_points.end(),
                         [&](Point p) { return rect_contains(*alpha, p); });
    }
  }
  return false;
}

void refresh_psa_on_event(const RoadNetwork& net, std::span<const Request> requests, Vehicle& v,
                          RequestId request, PsaEvent /*event*/, const SimConfig& config) {
  if (v.psa.furthest != request) return;
  v.psa = furthest_psa(net, requests, v, config.buffer_km, config.max_detour);
}

TrialResult evaluate_trial(const RoadNetwork& net, const WorldState& state, const Vehicle& v,
                           const Request& r, double now, const SimConfig& config,
                           SchedulerKind kind) {
  TrialResult out;
  out.vehicle = v.id;
  out.stops = static_cast<int>(v.path.size());
  out.capacity_ok = passengers_committed(v, state.requests) + r.passengers <= v.capacity;
  if (!out.capacity_ok) return out;
  out.bounded = waiting_time(r, now) <= config.wait_threshold_s;

  if (kind == SchedulerKind::Psap && out.bounded) {
    const Point o = net.position(r.origin);
    const Point d = net.position(r.destination);
    std::vector<Point> points;
    points.reserve(v.path.size());
    for (const auto& s : v.path) points.push_back(net.position(s.node));
    const Point here = vehicle_position(net, v);
    for (auto c : {InsertionCase::A, InsertionCase::B, InsertionCase::C}) {
      out.gate_pass[case_index(c)] = gate(v.psa, c, o, d, points, here, config.buffer_km, config.gating);
    }
  }

  const auto points = path_points(v);
  const int stops = out.stops;
  for (int i = 0; i <= stops; ++i) {
    for (int j = i + 1; j <= stops + 1; ++j) {
      if (!out.gate_pass[case_index(classify(i, j, stops))]) continue;
      out.evaluated.push_back(
          evaluate_candidate(net, state.requests, v, points, r, i, j, out.bounded, config));
    }
  }
  return out;
}

void apply_assignment(const RoadNetwork& net, WorldState& state, const SimConfig& config,
                      const Assignment& a) {
  Vehicle& v = state.vehicles.at(static_cast<std::size_t>(a.vehicle));
  Request& r = state.requests.at(static_cast<std::size_t>(a.request));
  const int stops = static_cast<int>(v.path.size());
  v.path = splice(v.path, {StopKind::Origin, r.id, r.origin},
                  {StopKind::Destination, r.id, r.destination}, a.i, a.j);
  v.service_list.push_back(r.id);
  r.state = RequestState::Waiting;
  r.vehicle = v.id;
  r.schedule_time = a.time;
  r.schedule_position = vehicle_position(net, v);
  r.odometer_at_schedule = v.odometer_km;
  r.buffer_bounded = a.buffer_bounded;
  if (a.j == stops + 1) {
    v.psa = furthest_psa(net, state.requests, v, config.buffer_km, config.max_detour);
  }
}

EpochResult run_epoch(const RoadNetwork& net, WorldState& state, const SimConfig& config,
                      double now, SchedulerKind kind, const TrialObserver& observer) {
  EpochResult result;
  std::vector<RequestId> pending;
  for (const auto& r : state.requests) {
    if (r.state == RequestState::Unscheduled && r.t <= now) pending.push_back(r.id);
  }
  // Waiting time is now - t for every pending request, so descending waiting
  // time is ascending t.
  std::stable_sort(pending.begin(), pending.end(), [&](RequestId a, RequestId b) {
    const double wa = waiting_time(state.requests[static_cast<std::size_t>(a)], now);
    const double wb = waiting_time(state.requests[static_cast<std::size_t>(b)], now);
    if (wa != wb) return wa > wb;
    return a < b;
  });

  for (RequestId rid : pending) {
    const Request& r = state.requests[static_cast<std::size_t>(rid)];
    Assignment best;
    best.cost = kInfCost;
    for (const Vehicle& v : state.vehicles) {
      const TrialResult trial = evaluate_trial(net, state, v, r, now, config, kind);
      if (observer) observer(TrialContext{state, v, r, now, trial});
      if (!trial.capacity_ok) continue;
      const auto n = candidate_counts(trial.stops + 1);
      result.counters.exhaustive[0] += n.a;
      result.counters.exhaustive[1] += n.b;
      result.counters.exhaustive[2] += n.c;
      for (const auto& c : trial.evaluated) {
        ++result.counters.evaluated[case_index(c.kase)];
        if (c.cost < best.cost) {
          best = {rid, v.id, c.i, c.j, c.kase, c.cost, now, trial.bounded};
        }
      }
    }
    if (std::isfinite(best.cost)) {
      apply_assignment(net, state, config, best);
      result.assignments.push_back(best);
    }
  }
  return result;
}

}  // namespace psap
