// Domain state: requests, vehicles, service lists and stop paths.
#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "psap/geometry.hpp"
#include "psap/roadnet.hpp"

namespace psap {

using VehicleId = int;

enum class RequestState { Unscheduled, Waiting, Onboard, Completed };

std::string_view to_string(RequestState s);

struct Request {
  RequestId id = 0;            // dense index into WorldState::requests
  std::int64_t external_id = 0;
  int passengers = 1;          // n
  double t = 0.0;              // earliest start, s
  NodeId origin = 0;
  NodeId destination = 0;
  double direct_km = 0.0;      // D(o, d)

  RequestState state = RequestState::Unscheduled;
  VehicleId vehicle = -1;
  double schedule_time = 0.0;
  Point schedule_position;           // p_s
  double odometer_at_schedule = 0.0;
  bool buffer_bounded = false;       // matched while w <= W, so b <= B is owed
  double pickup_time = 0.0;
  double dropoff_time = 0.0;
  double odometer_at_pickup = 0.0;
  double odometer_at_dropoff = 0.0;
};

enum class StopKind { Origin, Destination };

struct Stop {
  StopKind kind = StopKind::Origin;
  RequestId request = 0;
  NodeId node = 0;

  friend bool operator==(const Stop&, const Stop&) = default;
};

struct Vehicle {
  VehicleId id = 0;
  int capacity = 5;
  // Node the vehicle is at (residual 0) or heading to along its current edge
  // from prev_node. This node is the head of every planned path.
  NodeId node = 0;
  NodeId prev_node = 0;
  double residual_km = 0.0;
  double odometer_km = 0.0;
  std::vector<RequestId> service_list;  // L_p
  std::vector<Stop> path;               // Q_p without the head
  VehiclePsa psa;
  std::vector<NodeId> leg;  // remaining nodes of the current leg, front is `node`

  bool idle() const { return path.empty(); }
};

enum class GatingMode { Literal, Inclusive };

std::string_view to_string(GatingMode m);

struct SimConfig {
  double max_detour = 0.2;        // Delta
  double wait_threshold_s = 240;  // W
  double buffer_km = 6.0;         // B
  int capacity = 5;               // C
  double speed_kmh = 30.0;
  double epoch_s = 10.0;
  GatingMode gating = GatingMode::Literal;
  bool strict_occupancy = false;
  int vehicles = 70;
  std::uint64_t seed = 1;
  std::optional<double> horizon_s;
  double start_offset_s = 0.0;

  void validate() const;
};

struct WorldState {
  double clock = 0.0;
  std::vector<Vehicle> vehicles;
  std::vector<Request> requests;

  std::vector<RequestId> in_state(RequestState s) const;
};

// True planar position of a vehicle (interpolated when mid-edge).
Point vehicle_position(const RoadNetwork& net, const Vehicle& v);

double waiting_time(const Request& r, double now);

// Planned distance from the vehicle's true position to each stop of `path`.
std::vector<double> stop_offsets(const RoadNetwork& net, const Vehicle& v,
                                 std::span<const Stop> path);

// Detour ratio of `r` on vehicle `v` if it follows `path` (with offsets from
// stop_offsets). Requests not yet scheduled are treated as matched now.
double current_detour(const Request& r, const Vehicle& v, std::span<const Stop> path,
                      std::span<const double> offsets);
double current_detour(const RoadNetwork& net, const Request& r, const Vehicle& v);

// Buffer distance: travel since schedule time until pickup (planned or realized).
double current_buffer(const Request& r, const Vehicle& v, std::span<const Stop> path,
                      std::span<const double> offsets);
double current_buffer(const RoadNetwork& net, const Request& r, const Vehicle& v);

int passengers_committed(const Vehicle& v, std::span<const Request> requests);

// Largest simultaneous load along `path`, starting from the on-board load.
int peak_occupancy(std::span<const Stop> path, std::span<const Request> requests);

// Throws std::logic_error when Q_p does not hold exactly the stops the
// service list and request states require.
void check_coherence(const Vehicle& v, std::span<const Request> requests);

// Requests CSV: `id,t_s,n,o_node,d_node`. Node ids are external ids.
std::vector<Request> parse_requests(std::istream& in, const RoadNetwork& net,
                                    const std::string& name = "requests");
std::vector<Request> load_requests(const std::filesystem::path& file, const RoadNetwork& net);
std::string format_requests_csv(std::span<const Request> requests, const RoadNetwork& net);

}  // namespace psap
