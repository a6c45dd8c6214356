// Event-driven fleet simulation at constant speed.
//
// Vehicles move continuously along shortest paths between consecutive stops;
// pickups and dropoffs fire at the exact instant the stop node is reached.
// The scheduler runs every `epoch_s` simulated seconds on the requests
// released so far.
#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "psap/analysis.hpp"
#include "psap/model.hpp"
#include "psap/roadnet.hpp"
#include "psap/scheduler.hpp"

namespace psap {

enum class EventKind { RequestRelease, EpochRun, Pickup, Dropoff };

std::string_view to_string(EventKind k);

struct SimEvent {
  double t = 0.0;
  EventKind kind = EventKind::EpochRun;
  RequestId request = -1;
  VehicleId vehicle = -1;

  friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

struct EpochRow {
  int epoch = 0;
  double t = 0.0;
  EpochCounters counters;
  TrafficSnapshot snapshot;
  TrafficMetrics metrics;
  int assigned = 0;
  int unserved = 0;  // released, still unscheduled after this epoch
};

struct RequestOutcome {
  RequestId id = 0;
  std::int64_t external_id = 0;
  RequestState state = RequestState::Unscheduled;
  VehicleId vehicle = -1;
  double t = 0.0;
  double direct_km = 0.0;
  double schedule_time = 0.0;
  double pickup_time = 0.0;
  double dropoff_time = 0.0;
  double waiting_s = 0.0;  // pickup - t
  double travel_s = 0.0;   // dropoff - pickup
  double detour = 0.0;     // realized, completed requests
  double buffer_km = 0.0;  // realized, picked-up requests
  bool buffer_bounded = false;
};

struct PoevResult {
  double total_km = 0.0;
  long long fleet = 0;
};

struct SimTotals {
  double pv_km = 0.0;
  double completed_direct_km = 0.0;
  double saved_km = 0.0;
  double all_direct_km = 0.0;
  PoevResult poev;
  int requests = 0;
  int completed = 0;
  int unserved = 0;    // never scheduled
  int incomplete = 0;  // scheduled but not completed at the end
  int epochs = 0;
  double end_time = 0.0;
  EpochCounters counters;
  std::optional<double> peak_sharing_rate;
  double peak_utilization = 0.0;
};

struct SimReport {
  SimConfig config;
  SchedulerKind scheduler = SchedulerKind::Psap;
  std::vector<EpochRow> epochs;
  std::vector<RequestOutcome> requests;
  std::vector<Assignment> assignments;
  std::vector<SimEvent> events;
  std::vector<double> vehicle_km;
  SimTotals totals;
};

// Sum of direct shortest-path distances; one private vehicle per two trips.
PoevResult poev_baseline(const RoadNetwork& net, std::span<const Request> requests);

// Vehicles at uniformly drawn nodes (stream "vehicles" of config.seed).
WorldState initial_state(const RoadNetwork& net, std::vector<Request> requests,
                         const SimConfig& config);

// Moves `v` for `dt` seconds starting at `t0`, firing stop events in path
// order and updating the requests they concern.
std::vector<SimEvent> advance_vehicle(const RoadNetwork& net, Vehicle& v,
                                      std::vector<Request>& requests, double t0, double dt,
                                      const SimConfig& config);

SimReport run(const RoadNetwork& net, std::vector<Request> requests, const SimConfig& config,
              SchedulerKind scheduler, const TrialObserver& observer = {});

}  // namespace psap
