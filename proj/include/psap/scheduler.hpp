// PSA-pruned insertion planning (PSAP) and the exhaustive-search baseline.
#pragma once

#include <array>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "psap/geometry.hpp"
#include "psap/insertion.hpp"
#include "psap/model.hpp"
#include "psap/roadnet.hpp"

namespace psap {

enum class SchedulerKind { Psap, Exhaustive };

std::string_view to_string(SchedulerKind k);

inline constexpr std::size_t case_index(InsertionCase c) { return static_cast<std::size_t>(c); }

// Candidate evaluations per insertion case: `evaluated` is what the
// scheduler actually costed (M), `exhaustive` what ES would cost (N).
struct EpochCounters {
  std::array<long long, 3> evaluated{};
  std::array<long long, 3> exhaustive{};

  EpochCounters& operator+=(const EpochCounters& o);
  long long total_evaluated() const { return evaluated[0] + evaluated[1] + evaluated[2]; }
  long long total_exhaustive() const { return exhaustive[0] + exhaustive[1] + exhaustive[2]; }
};

struct Assignment {
  RequestId request = 0;
  VehicleId vehicle = 0;
  int i = 0;
  int j = 1;
  InsertionCase kase = InsertionCase::C;
  double cost = 0.0;
  double time = 0.0;
  bool buffer_bounded = false;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

// PSA of `v` from its furthest request (the one whose destination is the
// last stop): beta around (o, d) with sum (1+Δ)D(o, d), united with alpha
// around (p_s, o) with sum B while that request still waits.
VehiclePsa furthest_psa(const RoadNetwork& net, std::span<const Request> requests, const Vehicle& v,
                        double buffer_km, double max_detour);

// Whether candidates of case `c` are worth costing for a request (o, d).
bool gate(const VehiclePsa& psa, InsertionCase c, Point o, Point d,
          std::span<const Point> path_points, Point vehicle_pos, double buffer_km, GatingMode mode);

enum class PsaEvent { Pickup, Dropoff };

// Recomputes the PSA when `request`'s event changed the furthest request.
void refresh_psa_on_event(const RoadNetwork& net, std::span<const Request> requests, Vehicle& v,
                          RequestId request, PsaEvent event, const SimConfig& config);

// One (request, vehicle) trial.
struct TrialResult {
  VehicleId vehicle = 0;
  bool capacity_ok = false;
  bool bounded = false;  // waiting time within W: buffer enforced, gating active
  int stops = 0;
  std::array<bool, 3> gate_pass{true, true, true};
  std::vector<Candidate> evaluated;  // lexicographic (i, j) order
};

TrialResult evaluate_trial(const RoadNetwork& net, const WorldState& state, const Vehicle& v,
                           const Request& r, double now, const SimConfig& config,
                           SchedulerKind kind);

struct TrialContext {
  const WorldState& state;
  const Vehicle& vehicle;
  const Request& request;
  double now;
  const TrialResult& result;
};
using TrialObserver = std::function<void(const TrialContext&)>;

struct EpochResult {
  std::vector<Assignment> assignments;
  EpochCounters counters;
};

// Processes released unscheduled requests (t <= now) in descending waiting
// time, ties by ascending id, assigning each to the cheapest feasible
// insertion over all vehicles. Mutates `state`.
EpochResult run_epoch(const RoadNetwork& net, WorldState& state, const SimConfig& config,
                      double now, SchedulerKind kind, const TrialObserver& observer = {});

inline EpochResult psap_epoch(const RoadNetwork& net, WorldState& state, const SimConfig& config,
                              double now, const TrialObserver& observer = {}) {
  return run_epoch(net, state, config, now, SchedulerKind::Psap, observer);
}

inline EpochResult es_epoch(const RoadNetwork& net, WorldState& state, const SimConfig& config,
                            double now, const TrialObserver& observer = {}) {
  return run_epoch(net, state, config, now, SchedulerKind::Exhaustive, observer);
}

// Commits candidate (i, j) of `r` on vehicle `vid`.
void apply_assignment(const RoadNetwork& net, WorldState& state, const SimConfig& config,
                      const Assignment& a);

}  // namespace psap
