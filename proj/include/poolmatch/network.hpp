#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace poolmatch {

using NodeId = std::uint32_t;
using Seconds = double;
using Meters = double;

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Edge {
  NodeId from = 0;
  NodeId to = 0;
  Meters length = 0.0;
  Seconds drive_time = 0.0;
};

// Raised for malformed tabular input; carries the offending 1-based line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NetworkOptions {
  // Networks at or below this size get all-pairs tables at construction.
  std::size_t apsp_threshold = 2000;
  // Max number of per-source trees kept by the on-demand cache.
  std::size_t cache_capacity = 4096;
};

// Directed road graph with two metrics: driving time over directed edges and
// walking distance over the same edges treated as undirected.
//
// A built network is immutable. Queries are safe from any number of threads;
// the on-demand cache used above the all-pairs threshold is mutex-guarded.
class RoadNetwork {
 public:
  // Nodes are dense [0, points.size()). original_ids maps each dense index to
  // the id it had in the source data (identity when empty).
  RoadNetwork(std::vector<Point> points, std::vector<Edge> edges,
              std::vector<std::int64_t> original_ids = {}, NetworkOptions options = {});

  RoadNetwork(const RoadNetwork&) = delete;
  RoadNetwork& operator=(const RoadNetwork&) = delete;
  RoadNetwork(RoadNetwork&&) noexcept;
  RoadNetwork& operator=(RoadNetwork&&) noexcept;
  ~RoadNetwork();

  std::size_t node_count() const { return points_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Point>& points() const { return points_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Point& point(NodeId n) const { return points_.at(n); }
  bool valid(NodeId n) const { return n < points_.size(); }

  std::int64_t original_id(NodeId n) const;
  // Dense index for an id from the source files, if present.
  bool find_original(std::int64_t original, NodeId& out) const;

  // Shortest driving time; kUnreachable when no directed path exists.
  Seconds drive_time(NodeId a, NodeId b) const;
  // Shortest walking distance over undirected edge lengths.
  Meters walk_distance(NodeId a, NodeId b) const;
  // Node sequence of the shortest driving path a..b (inclusive). Empty if
  // unreachable, {a} when a == b.
  std::vector<NodeId> drive_path(NodeId a, NodeId b) const;
  // Next node on the shortest driving path from a toward b, or b itself.
  NodeId next_hop(NodeId a, NodeId b) const;
  // The directed edge a->b used by the driving metric (cheapest parallel edge).
  const Edge& edge_between(NodeId a, NodeId b) const;

  // Nodes within walking distance d_r of origin, with their distances, sorted
  // by node id. Always contains origin at distance 0.
  std::vector<std::pair<NodeId, Meters>> walk_neighborhood(NodeId origin, Meters d_r) const;

  bool has_all_pairs() const { return all_pairs_; }

 private:
  struct Tree {
    std::vector<double> dist;
    std::vector<NodeId> parent;  // predecessor on the shortest path tree
  };
  struct Cache;

  void check(NodeId n) const;
  Tree dijkstra_drive(NodeId source) const;
  std::vector<double> dijkstra_walk(NodeId source) const;
  std::shared_ptr<const Tree> drive_tree(NodeId source) const;
  std::shared_ptr<const std::vector<double>> walk_tree(NodeId source) const;

  std::vector<Point> points_;
  std::vector<Edge> edges_;
  std::vector<std::int64_t> original_ids_;
  std::unordered_map<std::int64_t, NodeId> by_original_;

  // CSR adjacency. out_: directed edge indices; walk_: undirected (node, length).
  std::vector<std::size_t> out_begin_, walk_begin_;
  std::vector<std::size_t> out_edges_;
  std::vector<std::pair<NodeId, Meters>> walk_adj_;

  bool all_pairs_ = false;
  std::vector<double> drive_apsp_;     // row = source
  std::vector<NodeId> next_apsp_;      // row = source, col = target
  std::vector<double> walk_apsp_;

  NetworkOptions options_;
  std::unique_ptr<Cache> cache_;
};

// Reads `id,x,y` and `from,to,length_m,drive_time_s` CSV streams. Sink nodes
// are removed until none remain, then only the largest weakly connected
// component is kept. Node ids are re-indexed densely in ascending id order.
RoadNetwork load_network(std::istream& nodes_csv, std::istream& edges_csv,
                         NetworkOptions options = {});
RoadNetwork load_network_files(const std::string& nodes_path, const std::string& edges_path,
                               NetworkOptions options = {});

// 4-connected grid; node id = row * width + col, coordinates in meters.
RoadNetwork generate_grid(std::size_t width, std::size_t height, Meters edge_len,
                          double drive_speed, NetworkOptions options = {});

// Node set of walk_neighborhood, sorted by id.
std::vector<NodeId> nodes_within_walk(const RoadNetwork& net, NodeId origin, Meters d_r);

void write_network(const RoadNetwork& net, std::ostream& nodes_csv, std::ostream& edges_csv);

}  // namespace poolmatch
