#include "psap/roadnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include <fmt/format.h>

#include "psap/csv.hpp"
#include "psap/errors.hpp"

namespace psap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEarthRadiusKm = 6371.0088;
constexpr double kLengthSlackKm = 1e-6;

SourceTree dijkstra(const RoadNetwork& net, NodeId source) {
  const std::size_t n = net.node_count();
  SourceTree t{std::vector<double>(n, kInf), std::vector<NodeId>(n, -1)};
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  t.dist[static_cast<std::size_t>(source)] = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > t.dist[static_cast<std::size_t>(u)]) continue;
    for (const auto& arc : net.out_arcs(u)) {
      const double nd = d + arc.length_km;
      auto& cur = t.dist[static_cast<std::size_t>(arc.to)];
      if (nd < cur) {
        cur = nd;
        t.pred[static_cast<std::size_t>(arc.to)] = u;
        heap.emplace(nd, arc.to);
      }
    }
  }
  return t;
}

}  // namespace

std::shared_ptr<const SourceTree> DistanceCache::find(NodeId source) const {
  std::lock_guard lock(mu_);
  return trees_.at(static_cast<std::size_t>(source));
}

std::shared_ptr<const SourceTree> DistanceCache::store(NodeId source,
                                                       std::shared_ptr<const SourceTree> tree) {
  std::lock_guard lock(mu_);
  auto& slot = trees_.at(static_cast<std::size_t>(source));
  if (!slot) slot = std::move(tree);
  return slot;
}

std::size_t DistanceCache::size() const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(
      std::count_if(trees_.begin(), trees_.end(), [](const auto& t) { return t != nullptr; }));
}

void DistanceCache::clear() {
  std::lock_guard lock(mu_);
  for (auto& t : trees_) t.reset();
}

RoadNetwork::RoadNetwork(std::vector<std::int64_t> external_ids, std::vector<Point> positions,
                         std::vector<Edge> edges)
    : external_ids_(std::move(external_ids)),
      positions_(std::move(positions)),
      edges_(std::move(edges)) {
  if (external_ids_.size() != positions_.size()) {
    throw InputError("node id and position counts differ");
  }
  for (std::size_t i = 0; i < external_ids_.size(); ++i) {
    if (!index_.emplace(external_ids_[i], static_cast<NodeId>(i)).second) {
      throw InputError(fmt::format("duplicate node id {}", external_ids_[i]));
    }
  }
  const auto n = static_cast<NodeId>(positions_.size());
  std::vector<std::size_t> degree(positions_.size() + 1, 0);
  for (const auto& e : edges_) {
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n) {
      throw InputError(fmt::format("edge {} references an unknown node", e.id));
    }
    if (!(e.length_km > 0.0)) {
      throw InputError(fmt::format("edge {} has non-positive length", e.id));
    }
    const double straight = euclid(position(e.from), position(e.to));
    if (e.length_km < straight - kLengthSlackKm) {
      throw InputError(fmt::format("edge {} is shorter ({} km) than its endpoints' distance ({} km)",
                                   e.id, e.length_km, straight));
    }
    ++degree[static_cast<std::size_t>(e.from)];
    if (e.bidirectional) ++degree[static_cast<std::size_t>(e.to)];
  }
  arc_begin_.assign(positions_.size() + 1, 0);
  std::exclusive_scan(degree.begin(), degree.end(), arc_begin_.begin(), std::size_t{0});
  arcs_.resize(arc_begin_.back());
  std::vector<std::size_t> fill(arc_begin_.begin(), arc_begin_.end() - 1);
  for (const auto& e : edges_) {
    arcs_[fill[static_cast<std::size_t>(e.from)]++] = {e.to, e.length_km};
    if (e.bidirectional) arcs_[fill[static_cast<std::size_t>(e.to)]++] = {e.from, e.length_km};
  }
  cache_ = std::make_unique<DistanceCache>(positions_.size());
}

std::optional<NodeId> RoadNetwork::find(std::int64_t external_id) const {
  const auto it = index_.find(external_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const RoadNetwork::Arc> RoadNetwork::out_arcs(NodeId n) const {
  const auto i = static_cast<std::size_t>(n);
  return std::span<const Arc>(arcs_).subspan(arc_begin_[i], arc_begin_[i + 1] - arc_begin_[i]);
}

std::optional<double> RoadNetwork::arc_length(NodeId a, NodeId b) const {
  std::optional<double> best;
  for (const auto& arc : out_arcs(a)) {
    if (arc.to == b && (!best || arc.length_km < *best)) best = arc.length_km;
  }
  return best;
}

std::shared_ptr<const SourceTree> RoadNetwork::tree(NodeId source) const {
  if (source < 0 || static_cast<std::size_t>(source) >= node_count()) {
    throw std::out_of_range(fmt::format("node index {} out of range", source));
  }
  if (auto t = cache_->find(source)) return t;
  return cache_->store(source, std::make_shared<const SourceTree>(dijkstra(*this, source)));
}

double RoadNetwork::shortest_dist(NodeId a, NodeId b) const {
  if (a == b) return 0.0;
  const double d = tree(a)->dist.at(static_cast<std::size_t>(b));
  if (d == kInf) {
    throw NoPathError(fmt::format("no path from node {} to node {}", external_id(a), external_id(b)));
  }
  return d;
}

double RoadNetwork::dist_or_inf(NodeId a, NodeId b) const {
  if (a == b) return 0.0;
  return tree(a)->dist.at(static_cast<std::size_t>(b));
}

std::vector<NodeId> RoadNetwork::shortest_path(NodeId a, NodeId b) const {
  if (a == b) return {a};
  const auto t = tree(a);
  if (t->dist.at(static_cast<std::size_t>(b)) == kInf) {
    throw NoPathError(fmt::format("no path from node {} to node {}", external_id(a), external_id(b)));
  }
  std::vector<NodeId> path;
  for (NodeId v = b; v != -1; v = t->pred[static_cast<std::size_t>(v)]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

std::pair<Point, Point> RoadNetwork::bbox() const {
  if (positions_.empty()) return {};
  Point lo = positions_.front();
  Point hi = lo;
  for (const auto& p : positions_) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  return {lo, hi};
}

double RoadNetwork::bbox_area() const {
  const auto [lo, hi] = bbox();
  return (hi.x - lo.x) * (hi.y - lo.y);
}

bool RoadNetwork::strongly_connected(std::span<const NodeId> nodes) const {
  if (nodes.empty()) return true;
  const NodeId root = nodes.front();
  const auto forward = tree(root);
  for (NodeId v : nodes) {
    if (forward->dist.at(static_cast<std::size_t>(v)) == kInf) return false;
  }
  // Reverse reachability by breadth-first search on transposed arcs.
  std::vector<std::vector<NodeId>> incoming(node_count());
  for (std::size_t u = 0; u < node_count(); ++u) {
    for (const auto& arc : out_arcs(static_cast<NodeId>(u))) {
      incoming[static_cast<std::size_t>(arc.to)].push_back(static_cast<NodeId>(u));
    }
  }
  std::vector<char> seen(node_count(), 0);
  std::vector<NodeId> stack{root};
  seen[static_cast<std::size_t>(root)] = 1;
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    for (NodeId u : incoming[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(u)]) {
        seen[static_cast<std::size_t>(u)] = 1;
        stack.push_back(u);
      }
    }
  }
  return std::all_of(nodes.begin(), nodes.end(),
                     [&](NodeId v) { return seen[static_cast<std::size_t>(v)] != 0; });
}

double stop_sequence_length(const RoadNetwork& net, std::span<const NodeId> stops) {
  double total = 0.0;
  for (std::size_t k = 1; k < stops.size(); ++k) total += net.shortest_dist(stops[k - 1], stops[k]);
  return total;
}

RoadNetwork gen_grid(int nx, int ny, double spacing_km) {
  if (nx < 2 || ny < 2) throw InputError("grid needs nx >= 2 and ny >= 2");
  if (!(spacing_km > 0.0)) throw InputError("grid spacing must be positive");
  std::vector<std::int64_t> ids;
  std::vector<Point> pos;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      ids.push_back(static_cast<std::int64_t>(iy) * nx + ix);
      pos.push_back({ix * spacing_km, iy * spacing_km});
    }
  }
  std::vector<Edge> edges;
  std::int64_t next_id = 0;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const NodeId here = iy * nx + ix;
      if (ix + 1 < nx) edges.push_back({next_id++, here, here + 1, spacing_km, true});
      if (iy + 1 < ny) edges.push_back({next_id++, here, here + nx, spacing_km, true});
    }
  }
  return RoadNetwork(std::move(ids), std::move(pos), std::move(edges));
}

RoadNetwork parse_network(std::istream& nodes, std::istream& edges, const std::string& nodes_name,
                          const std::string& edges_name) {
  std::vector<std::int64_t> ids;
  std::vector<Point> pos;
  {
    CsvReader csv(nodes, nodes_name);
    const auto& h = csv.header();
    const bool planar = h == std::vector<std::string>{"id", "x_km", "y_km"};
    const bool geographic = h == std::vector<std::string>{"id", "lat", "lon"};
    if (!planar && !geographic) {
      csv.fail("nodes header must be 'id,x_km,y_km' or 'id,lat,lon'");
    }
    std::vector<std::string> row;
    while (csv.next(row)) {
      ids.push_back(csv.to_int(row[0]));
      pos.push_back({csv.to_double(row[1]), csv.to_double(row[2])});
    }
    if (geographic && !pos.empty()) {
      double lat0 = 0.0;
      double lon0 = 0.0;
      for (const auto& p : pos) {
        lat0 += p.x;
        lon0 += p.y;
      }
      lat0 /= static_cast<double>(pos.size());
      lon0 /= static_cast<double>(pos.size());
      const double rad = M_PI / 180.0;
      for (auto& p : pos) {
        const double lat = p.x;
        const double lon = p.y;
        p = {kEarthRadiusKm * (lon - lon0) * rad * std::cos(lat0 * rad),
             kEarthRadiusKm * (lat - lat0) * rad};
      }
    }
  }
  std::unordered_map<std::int64_t, NodeId> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], static_cast<NodeId>(i));

  std::vector<Edge> out;
  CsvReader csv(edges, edges_name);
  if (csv.header() != std::vector<std::string>{"id", "from", "to", "length_km", "bidirectional"}) {
    csv.fail("edges header must be 'id,from,to,length_km,bidirectional'");
  }
  std::vector<std::string> row;
  while (csv.next(row)) {
    Edge e;
    e.id = csv.to_int(row[0]);
    const auto from = index.find(csv.to_int(row[1]));
    const auto to = index.find(csv.to_int(row[2]));
    if (from == index.end() || to == index.end()) csv.fail("edge references an unknown node id");
    e.from = from->second;
    e.to = to->second;
    e.length_km = csv.to_double(row[3]);
    if (row[4] != "0" && row[4] != "1") csv.fail("bidirectional must be 0 or 1");
    e.bidirectional = row[4] == "1";
    out.push_back(e);
  }
  return RoadNetwork(std::move(ids), std::move(pos), std::move(out));
}

RoadNetwork load_network(const std::filesystem::path& nodes_file,
                         const std::filesystem::path& edges_file) {
  std::ifstream nodes(nodes_file);
  if (!nodes) throw InputError(fmt::format("cannot open {}", nodes_file.string()));
  std::ifstream edges(edges_file);
  if (!edges) throw InputError(fmt::format("cannot open {}", edges_file.string()));
  return parse_network(nodes, edges, nodes_file.string(), edges_file.string());
}

std::string format_nodes_csv(const RoadNetwork& net) {
  std::string out = "id,x_km,y_km\n";
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    const auto p = net.position(static_cast<NodeId>(i));
    out += fmt::format("{},{},{}\n", net.external_id(static_cast<NodeId>(i)), p.x, p.y);
  }
  return out;
}

std::string format_edges_csv(const RoadNetwork& net) {
  std::string out = "id,from,to,length_km,bidirectional\n";
  for (const auto& e : net.edges()) {
    out += fmt::format("{},{},{},{},{}\n", e.id, net.external_id(e.from), net.external_id(e.to),
                       e.length_km, e.bidirectional ? 1 : 0);
  }
  return out;
}

}  // namespace psap
