#include "psap/model.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

#include "psap/csv.hpp"
#include "psap/errors.hpp"

namespace psap {

std::string_view to_string(RequestState s) {
  switch (s) {
    case RequestState::Unscheduled: return "unscheduled";
    case RequestState::Waiting: return "waiting";
    case RequestState::Onboard: return "onboard";
    case RequestState::Completed: return "completed";
  }
  return "?";
}

std::string_view to_string(GatingMode m) {
  return m == GatingMode::Literal ? "literal" : "inclusive";
}

void SimConfig::validate() const {
  if (max_detour < 0 || wait_threshold_s < 0 || buffer_km < 0) {
    throw InputError("thresholds must be non-negative");
  }
  if (!(speed_kmh > 0)) throw InputError("speed must be positive");
  if (!(epoch_s > 0)) throw InputError("epoch length must be positive");
  if (capacity < 1) throw InputError("capacity must be at least 1");
  if (vehicles < 1) throw InputError("at least one vehicle is required");
  if (horizon_s && *horizon_s < 0) throw InputError("horizon must be non-negative");
}

std::vector<RequestId> WorldState::in_state(RequestState s) const {
  std::vector<RequestId> out;
  for (const auto& r : requests) {
    if (r.state == s) out.push_back(r.id);
  }
  return out;
}

Point vehicle_position(const RoadNetwork& net, const Vehicle& v) {
  const Point head = net.position(v.node);
  if (v.residual_km <= 0.0 || v.prev_node == v.node) return head;
  const Point tail = net.position(v.prev_node);
  const double len = net.arc_length(v.prev_node, v.node).value_or(v.residual_km);
  const double f = std::clamp(v.residual_km / len, 0.0, 1.0);
  return {head.x + (tail.x - head.x) * f, head.y + (tail.y - head.y) * f};
}

double waiting_time(const Request& r, double now) {
  switch (r.state) {
    case RequestState::Unscheduled:
    case RequestState::Waiting:
      return std::max(0.0, now - r.t);
    case RequestState::Onboard:
    case RequestState::Completed:
      return r.pickup_time - r.t;
  }
  return 0.0;
}

std::vector<double> stop_offsets(const RoadNetwork& net, const Vehicle& v,
                                 std::span<const Stop> path) {
  std::vector<double> out;
  out.reserve(path.size());
  double acc = v.residual_km;
  NodeId at = v.node;
  for (const auto& s : path) {
    acc += net.shortest_dist(at, s.node);
    out.push_back(acc);
    at = s.node;
  }
  return out;
}

namespace {

std::size_t find_stop(std::span<const Stop> path, RequestId r, StopKind kind) {
  for (std::size_t k = 0; k < path.size(); ++k) {
    if (path[k].request == r && path[k].kind == kind) return k;
  }
  throw std::logic_error(fmt::format("request {} has no {} stop on the path", r,
                                     kind == StopKind::Origin ? "origin" : "destination"));
}

}  // namespace

double current_detour(const Request& r, const Vehicle& v, std::span<const Stop> path,
                      std::span<const double> offsets) {
  double traveled = 0.0;
  switch (r.state) {
    case RequestState::Completed:
      traveled = r.odometer_at_dropoff - r.odometer_at_pickup;
      break;
    case RequestState::Onboard:
      traveled = v.odometer_km - r.odometer_at_pickup +
                 offsets[find_stop(path, r.id, StopKind::Destination)];
      break;
    case RequestState::Unscheduled:
    case RequestState::Waiting:
      traveled = offsets[find_stop(path, r.id, StopKind::Destination)] -
                 offsets[find_stop(path, r.id, StopKind::Origin)];
      break;
  }
  return traveled / r.direct_km - 1.0;
}

double current_detour(const RoadNetwork& net, const Request& r, const Vehicle& v) {
  return current_detour(r, v, v.path, stop_offsets(net, v, v.path));
}

double current_buffer(const Request& r, const Vehicle& v, std::span<const Stop> path,
                      std::span<const double> offsets) {
  switch (r.state) {
    case RequestState::Unscheduled:
      return offsets[find_stop(path, r.id, StopKind::Origin)];
    case RequestState::Waiting:
      return v.odometer_km - r.odometer_at_schedule +
             offsets[find_stop(path, r.id, StopKind::Origin)];
    case RequestState::Onboard:
    case RequestState::Completed:
      return r.odometer_at_pickup - r.odometer_at_schedule;
  }
  return 0.0;
}

double current_buffer(const RoadNetwork& net, const Request& r, const Vehicle& v) {
  return current_buffer(r, v, v.path, stop_offsets(net, v, v.path));
}

int passengers_committed(const Vehicle& v, std::span<const Request> requests) {
  int total = 0;
  for (RequestId id : v.service_list) total += requests[static_cast<std::size_t>(id)].passengers;
  return total;
}

int peak_occupancy(std::span<const Stop> path, std::span<const Request> requests) {
  int load = 0;
  for (const auto& s : path) {
    const auto& r = requests[static_cast<std::size_t>(s.request)];
    if (s.kind == StopKind::Destination && r.state == RequestState::Onboard) load += r.passengers;
  }
  int peak = load;
  for (const auto& s : path) {
    const int n = requests[static_cast<std::size_t>(s.request)].passengers;
    load += s.kind == StopKind::Origin ? n : -n;
    peak = std::max(peak, load);
  }
  return peak;
}

void check_coherence(const Vehicle& v, std::span<const Request> requests) {
  std::size_t expected = 0;
  for (RequestId id : v.service_list) {
    const auto& r = requests[static_cast<std::size_t>(id)];
    if (r.vehicle != v.id) {
      throw std::logic_error(fmt::format("request {} listed on vehicle {} but assigned to {}", id,
                                         v.id, r.vehicle));
    }
    const auto count = [&](StopKind kind) {
      return std::count_if(v.path.begin(), v.path.end(), [&](const Stop& s) {
        return s.request == id && s.kind == kind;
      });
    };
    const auto origins = count(StopKind::Origin);
    const auto dests = count(StopKind::Destination);
    if (r.state == RequestState::Waiting) {
      if (origins != 1 || dests != 1) {
        throw std::logic_error(fmt::format("waiting request {} needs one origin and one destination", id));
      }
      if (find_stop(v.path, id, StopKind::Origin) > find_stop(v.path, id, StopKind::Destination)) {
        throw std::logic_error(fmt::format("request {} destination precedes origin", id));
      }
      expected += 2;
    } else if (r.state == RequestState::Onboard) {
      if (origins != 0 || dests != 1) {
        throw std::logic_error(fmt::format("onboard request {} needs exactly its destination", id));
      }
      expected += 1;
    } else {
      throw std::logic_error(fmt::format("request {} in service list with state {}", id,
                                         to_string(r.state)));
    }
  }
  if (expected != v.path.size()) {
    throw std::logic_error(fmt::format("vehicle {} path has {} stops, service list implies {}", v.id,
                                       v.path.size(), expected));
  }
  for (const auto& s : v.path) {
    const auto& r = requests[static_cast<std::size_t>(s.request)];
    if (s.node != (s.kind == StopKind::Origin ? r.origin : r.destination)) {
      throw std::logic_error(fmt::format("stop node mismatch for request {}", s.request));
    }
  }
}

std::vector<Request> parse_requests(std::istream& in, const RoadNetwork& net,
                                    const std::string& name) {
  CsvReader csv(in, name);
  if (csv.header() != std::vector<std::string>{"id", "t_s", "n", "o_node", "d_node"}) {
    csv.fail("requests header must be 'id,t_s,n,o_node,d_node'");
  }
  std::vector<Request> out;
  std::vector<std::string> row;
  while (csv.next(row)) {
    Request r;
    r.external_id = csv.to_int(row[0]);
    r.t = csv.to_double(row[1]);
    if (r.t < 0) csv.fail("t_s must be non-negative");
    r.passengers = static_cast<int>(csv.to_int(row[2]));
    if (r.passengers < 1) csv.fail("n must be at least 1");
    const auto o = net.find(csv.to_int(row[3]));
    const auto d = net.find(csv.to_int(row[4]));
    if (!o || !d) csv.fail("request references an unknown node id");
    r.origin = *o;
    r.destination = *d;
    if (r.origin == r.destination) csv.fail("origin equals destination");
    out.push_back(r);
  }
  std::sort(out.begin(), out.end(),
            [](const Request& a, const Request& b) { return a.external_id < b.external_id; });
  for (std::size_t k = 1; k < out.size(); ++k) {
    if (out[k].external_id == out[k - 1].external_id) {
      throw InputError(fmt::format("{}: duplicate request id {}", name, out[k].external_id));
    }
  }
  std::vector<NodeId> nodes;
  for (const auto& r : out) {
    nodes.push_back(r.origin);
    nodes.push_back(r.destination);
  }
  if (!net.strongly_connected(nodes)) {
    throw InputError(fmt::format("{}: request endpoints are not mutually reachable", name));
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].id = static_cast<RequestId>(k);
    out[k].direct_km = net.shortest_dist(out[k].origin, out[k].destination);
  }
  return out;
}

std::vector<Request> load_requests(const std::filesystem::path& file, const RoadNetwork& net) {
  std::ifstream in(file);
  if (!in) throw InputError(fmt::format("cannot open {}", file.string()));
  return parse_requests(in, net, file.string());
}

std::string format_requests_csv(std::span<const Request> requests, const RoadNetwork& net) {
  std::string out = "id,t_s,n,o_node,d_node\n";
  for (const auto& r : requests) {
    out += fmt::format("{},{},{},{},{}\n", r.external_id, r.t, r.passengers,
                       net.external_id(r.origin), net.external_id(r.destination));
  }
  return out;
}

}  // namespace psap
