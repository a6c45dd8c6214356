#include "psap/insertion.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace psap {

std::string_view to_string(InsertionCase c) {
  switch (c) {
    case InsertionCase::A: return "A";
    case InsertionCase::B: return "B";
    case InsertionCase::C: return "C";
  }
  return "?";
}

double insertion_cost(const RoadNetwork& net, std::span<const NodeId> points, NodeId o, NodeId d,
                      int i, int j) {
  const int last = static_cast<int>(points.size()) - 1;
  assert(0 <= i && i <= last && i + 1 <= j && j <= last + 1);
  const auto at = [&](int k) { return points[static_cast<std::size_t>(k)]; };
  const auto dist = [&](NodeId a, NodeId b) { return net.dist_or_inf(a, b); };

  double added = 0.0;
  double removed = 0.0;
  if (j == i + 1) {
    added = dist(at(i), o) + dist(o, d);
    if (i < last) {
      added += dist(d, at(i + 1));
      removed = dist(at(i), at(i + 1));
    }
  } else {
    added = dist(at(i), o) + dist(o, at(i + 1));
    removed = dist(at(i), at(i + 1));
    if (j == last + 1) {
      added += dist(at(last), d);
    } else {
      added += dist(at(j - 1), d) + dist(d, at(j));
      removed += dist(at(j - 1), at(j));
    }
  }
  if (!std::isfinite(added) || !std::isfinite(removed)) return kInfCost;
  // Rounding in the shortest-path sums can leave a -1e-16 residue.
  return std::max(0.0, added - removed);
}

std::vector<Stop> splice(std::span<const Stop> path, const Stop& origin, const Stop& destination,
                         int i, int j) {
  const int stops = static_cast<int>(path.size());
  assert(0 <= i && i <= stops && i + 1 <= j && j <= stops + 1);
  std::vector<Stop> out;
  out.reserve(path.size() + 2);
  for (int k = 0; k <= stops; ++k) {
    if (k >= 1) out.push_back(path[static_cast<std::size_t>(k - 1)]);
    if (k == i) out.push_back(origin);
    if (k == j - 1) out.push_back(destination);
  }
  return out;
}

std::vector<NodeId> path_points(const Vehicle& v) {
  std::vector<NodeId> out;
  out.reserve(v.path.size() + 1);
  out.push_back(v.node);
  for (const auto& s : v.path) out.push_back(s.node);
  return out;
}

QosResult qos_check(const RoadNetwork& net, std::span<const Request> requests, const Vehicle& v,
                    std::span<const Stop> spliced, const Request& incoming, bool check_buffer,
                    const SimConfig& config) {
  const auto offsets = stop_offsets(net, v, spliced);
  const auto check = [&](const Request& r, bool buffer_applies) -> QosResult {
    const double detour = current_detour(r, v, spliced, offsets);
    if (detour > config.max_detour + kQosTolerance) {
      return {false, r.id, QosBound::Detour, detour};
    }
    if (buffer_applies) {
      const double buffer = current_buffer(r, v, spliced, offsets);
      if (buffer > config.buffer_km + kQosTolerance) {
        return {false, r.id, QosBound::Buffer, buffer};
      }
    }
    return {};
  };

  if (auto q = check(incoming, check_buffer); !q.feasible) return q;
  for (RequestId id : v.service_list) {
    const auto& r = requests[static_cast<std::size_t>(id)];
    const bool waiting = r.state == RequestState::Waiting;
    if (auto q = check(r, waiting && (check_buffer || r.buffer_bounded)); !q.feasible) return q;
  }
  return {};
}

Candidate evaluate_candidate(const RoadNetwork& net, std::span<const Request> requests,
                             const Vehicle& v, std::span<const NodeId> points,
                             const Request& incoming, int i, int j, bool check_buffer,
                             const SimConfig& config) {
  const int stops = static_cast<int>(points.size()) - 1;
  Candidate c{i, j, classify(i, j, stops)};
  c.phi = insertion_cost(net, points, incoming.origin, incoming.destination, i, j);
  if (!std::isfinite(c.phi)) return c;
  const auto spliced = splice(v.path, {StopKind::Origin, incoming.id, incoming.origin},
                              {StopKind::Destination, incoming.id, incoming.destination}, i, j);
  if (config.strict_occupancy && peak_occupancy(spliced, requests) > v.capacity) return c;
  if (qos_check(net, requests, v, spliced, incoming, check_buffer, config).feasible) c.cost = c.phi;
  return c;
}

std::vector<Candidate> enumerate_all(const RoadNetwork& net, std::span<const Request> requests,
                                     const Vehicle& v, const Request& incoming, bool check_buffer,
                                     const SimConfig& config) {
  const auto points = path_points(v);
  const int stops = static_cast<int>(v.path.size());
  std::vector<Candidate> out;
  out.reserve(static_cast<std::size_t>((stops + 1) * (stops + 2) / 2));
  for (int i = 0; i <= stops; ++i) {
    for (int j = i + 1; j <= stops + 1; ++j) {
      out.push_back(evaluate_candidate(net, requests, v, points, incoming, i, j, check_buffer, config));
    }
  }
  return out;
}

}  // namespace psap
