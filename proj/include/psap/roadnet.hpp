// Road network: planar nodes, weighted directed arcs, and memoized
// shortest-path distances D(a, b).
#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "psap/geometry.hpp"

namespace psap {

using NodeId = std::int32_t;

struct Edge {
  std::int64_t id = 0;
  NodeId from = 0;
  NodeId to = 0;
  double length_km = 0.0;
  bool bidirectional = true;
};

// Shortest-path tree rooted at one source.
struct SourceTree {
  std::vector<double> dist;  // +inf when unreachable
  std::vector<NodeId> pred;  // -1 for the source and unreachable nodes
};

// Per-source memo of Dijkstra runs. Concurrent readers are allowed; a missing
// tree may be computed by several threads at once, the first one stored wins
// and all computations are identical.
class DistanceCache {
 public:
  explicit DistanceCache(std::size_t nodes) : trees_(nodes) {}

  std::shared_ptr<const SourceTree> find(NodeId source) const;
  std::shared_ptr<const SourceTree> store(NodeId source, std::shared_ptr<const SourceTree> tree);
  std::size_t size() const;
  void clear();

 private:
  mutable std::mutex mu_;
  std::vector<std::shared_ptr<const SourceTree>> trees_;
};

class RoadNetwork {
 public:
  // Validates: unique external ids, known endpoints, positive lengths and
  // length >= euclid(endpoints) - 1e-6.
  RoadNetwork(std::vector<std::int64_t> external_ids, std::vector<Point> positions,
              std::vector<Edge> edges);

  RoadNetwork(RoadNetwork&&) noexcept = default;
  RoadNetwork& operator=(RoadNetwork&&) noexcept = default;

  std::size_t node_count() const { return positions_.size(); }
  Point position(NodeId n) const { return positions_.at(static_cast<std::size_t>(n)); }
  std::int64_t external_id(NodeId n) const { return external_ids_.at(static_cast<std::size_t>(n)); }
  std::optional<NodeId> find(std::int64_t external_id) const;
  std::span<const Edge> edges() const { return edges_; }

  struct Arc {
    NodeId to;
    double length_km;
  };
  std::span<const Arc> out_arcs(NodeId n) const;

  // Length of an arc a -> b (shortest parallel arc); nullopt if none.
  std::optional<double> arc_length(NodeId a, NodeId b) const;

  // Throws NoPathError when b is unreachable from a.
  double shortest_dist(NodeId a, NodeId b) const;

  // +inf instead of throwing.
  double dist_or_inf(NodeId a, NodeId b) const;

  // Node sequence a..b along the memoized shortest path (inclusive).
  std::vector<NodeId> shortest_path(NodeId a, NodeId b) const;

  std::shared_ptr<const SourceTree> tree(NodeId source) const;

  // Bounding-box area of all nodes, km^2.
  double bbox_area() const;
  std::pair<Point, Point> bbox() const;

  // Every node in `nodes` reaches every other one (checked through the first).
  bool strongly_connected(std::span<const NodeId> nodes) const;

  const DistanceCache& cache() const { return *cache_; }

 private:
  std::vector<std::int64_t> external_ids_;
  std::vector<Point> positions_;
  std::vector<Edge> edges_;
  std::unordered_map<std::int64_t, NodeId> index_;
  std::vector<std::size_t> arc_begin_;
  std::vector<Arc> arcs_;
  std::unique_ptr<DistanceCache> cache_;
};

double stop_sequence_length(const RoadNetwork& net, std::span<const NodeId> stops);

// nx * ny lattice with 4-neighbour bidirectional edges; ids row-major.
RoadNetwork gen_grid(int nx, int ny, double spacing_km);

// Nodes: header `id,x_km,y_km` or `id,lat,lon` (projected equirectangularly
// about the mean latitude). Edges: `id,from,to,length_km,bidirectional`.
RoadNetwork parse_network(std::istream& nodes, std::istream& edges,
                          const std::string& nodes_name = "nodes",
                          const std::string& edges_name = "edges");
RoadNetwork load_network(const std::filesystem::path& nodes_file,
                         const std::filesystem::path& edges_file);

std::string format_nodes_csv(const RoadNetwork& net);
std::string format_edges_csv(const RoadNetwork& net);

}  // namespace psap
