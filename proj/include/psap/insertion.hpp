// Insertion of an origin/destination pair into a vehicle path.
//
// A path is θ_0..θ_K where θ_0 is the vehicle's head node and θ_1..θ_K are
// its K stops. Candidate (i, j) puts the origin right after θ_i and the
// destination right after θ_{j-1} (directly after the origin when j = i+1),
// with 0 <= i <= K and i+1 <= j <= K+1.
#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "psap/model.hpp"
#include "psap/roadnet.hpp"

namespace psap {

inline constexpr double kInfCost = std::numeric_limits<double>::infinity();

// Comparison slack for detour and buffer bounds.
inline constexpr double kQosTolerance = 1e-9;

enum class InsertionCase { A, B, C };

std::string_view to_string(InsertionCase c);

// A: the destination does not become the last stop. B: it does, and the
// origin does not directly precede it. C: origin and destination are appended.
constexpr InsertionCase classify(int i, int j, int stops) {
  if (j <= stops) return InsertionCase::A;
  return i == stops ? InsertionCase::C : InsertionCase::B;
}

struct Candidate {
  int i = 0;
  int j = 1;
  InsertionCase kase = InsertionCase::C;
  double phi = kInfCost;   // raw insertion cost
  double cost = kInfCost;  // phi if QoS-feasible, else infinity
};

// Additional travel distance of inserting (o, d) at (i, j); `points` is
// θ_0..θ_K. Infinite when some leg is unreachable.
double insertion_cost(const RoadNetwork& net, std::span<const NodeId> points, NodeId o, NodeId d,
                      int i, int j);

std::vector<Stop> splice(std::span<const Stop> path, const Stop& origin, const Stop& destination,
                         int i, int j);

std::vector<NodeId> path_points(const Vehicle& v);

enum class QosBound { None, Detour, Buffer };

struct QosResult {
  bool feasible = true;
  std::optional<RequestId> violator;
  QosBound bound = QosBound::None;
  double value = 0.0;
};

// Detour bound for `incoming` and every request in the service list. With
// check_buffer the buffer bound applies to every waiting request including
// `incoming`; without it, only to committed requests matched under the bound.
// `incoming` must be Unscheduled and present on `spliced`.
QosResult qos_check(const RoadNetwork& net, std::span<const Request> requests, const Vehicle& v,
                    std::span<const Stop> spliced, const Request& incoming, bool check_buffer,
                    const SimConfig& config);

// Every (i, j) in lexicographic order, costed and QoS-checked.
std::vector<Candidate> enumerate_all(const RoadNetwork& net, std::span<const Request> requests,
                                     const Vehicle& v, const Request& incoming, bool check_buffer,
                                     const SimConfig& config);

// Cost and QoS evaluation of one candidate.
Candidate evaluate_candidate(const RoadNetwork& net, std::span<const Request> requests,
                             const Vehicle& v, std::span<const NodeId> points,
                             const Request& incoming, int i, int j, bool check_buffer,
                             const SimConfig& config);

}  // namespace psap
