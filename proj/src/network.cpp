#include "poolmatch/network.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <queue>
#include <utility>

#include "poolmatch/csv.hpp"

namespace poolmatch {

struct RoadNetwork::Cache {
  std::mutex mu;
  std::unordered_map<NodeId, std::shared_ptr<const Tree>> drive;
  std::unordered_map<NodeId, std::shared_ptr<const std::vector<double>>> walk;
};

RoadNetwork::RoadNetwork(std::vector<Point> points, std::vector<Edge> edges,
                         std::vector<std::int64_t> original_ids, NetworkOptions options)
    : points_(std::move(points)),
      edges_(std::move(edges)),
      original_ids_(std::move(original_ids)),
      options_(options),
      cache_(std::make_unique<Cache>()) {
  const std::size_t n = points_.size();
  if (!original_ids_.empty() && original_ids_.size() != n)
    throw ValidationError("original id table size does not match node count");
  for (std::size_t i = 0; i < original_ids_.size(); ++i) {
    if (!by_original_.emplace(original_ids_[i], static_cast<NodeId>(i)).second)
      throw ValidationError("duplicate node id " + std::to_string(original_ids_[i]));
  }
  for (const Edge& e : edges_) {
    if (e.from >= n || e.to >= n)
      throw ValidationError("edge endpoint out of range: " + std::to_string(e.from) + "->" + std::to_string(e.to));
    if (!(e.drive_time > 0.0) || !(e.length > 0.0))
      throw ValidationError("edge " + std::to_string(e.from) + "->" + std::to_string(e.to) +
                            " must have positive length and drive time");
  }

  out_begin_.assign(n + 1, 0);
  walk_begin_.assign(n + 1, 0);
  for (const Edge& e : edges_) {
    ++out_begin_[e.from + 1];
    ++walk_begin_[e.from + 1];
    ++walk_begin_[e.to + 1];
  }
  std::partial_sum(out_begin_.begin(), out_begin_.end(), out_begin_.begin());
  std::partial_sum(walk_begin_.begin(), walk_begin_.end(), walk_begin_.begin());
  out_edges_.resize(edges_.size());
  walk_adj_.resize(2 * edges_.size());
  std::vector<std::size_t> out_fill(out_begin_.begin(), out_begin_.end() - 1);
  std::vector<std::size_t> walk_fill(walk_begin_.begin(), walk_begin_.end() - 1);
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    out_edges_[out_fill[e.from]++] = i;
    walk_adj_[walk_fill[e.from]++] = {e.to, e.length};
    walk_adj_[walk_fill[e.to]++] = {e.from, e.length};
  }

  if (n <= options_.apsp_threshold) {
    all_pairs_ = true;
    drive_apsp_.resize(n * n);
    next_apsp_.resize(n * n);
    walk_apsp_.resize(n * n);
    std::vector<NodeId> order(n);
    for (NodeId s = 0; s < n; ++s) {
      Tree t = dijkstra_drive(s);
      std::copy(t.dist.begin(), t.dist.end(), drive_apsp_.begin() + s * n);
      // First hop toward each target, propagated in order of distance so the
      // parent's hop is always known first.
      std::iota(order.begin(), order.end(), NodeId{0});
      std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
        return t.dist[a] != t.dist[b] ? t.dist[a] < t.dist[b] : a < b;
      });
      NodeId* next = next_apsp_.data() + s * n;
      for (NodeId v : order) {
        if (v == s || t.dist[v] == kUnreachable) {
          next[v] = v;
          continue;
        }
        next[v] = t.parent[v] == s ? v : next[t.parent[v]];
      }
      std::vector<double> w = dijkstra_walk(s);
      std::copy(w.begin(), w.end(), walk_apsp_.begin() + s * n);
    }
  }
}

RoadNetwork::RoadNetwork(RoadNetwork&&) noexcept = default;
RoadNetwork& RoadNetwork::operator=(RoadNetwork&&) noexcept = default;
RoadNetwork::~RoadNetwork() = default;

std::int64_t RoadNetwork::original_id(NodeId n) const {
  check(n);
  return original_ids_.empty() ? static_cast<std::int64_t>(n) : original_ids_[n];
}

bool RoadNetwork::find_original(std::int64_t original, NodeId& out) const {
  if (original_ids_.empty()) {
    if (original < 0 || static_cast<std::size_t>(original) >= points_.size()) return false;
    out = static_cast<NodeId>(original);
    return true;
  }
  auto it = by_original_.find(original);
  if (it == by_original_.end()) return false;
  out = it->second;
  return true;
}

void RoadNetwork::check(NodeId n) const {
  if (n >= points_.size()) throw std::out_of_range("node id " + std::to_string(n) + " out of range");
}

RoadNetwork::Tree RoadNetwork::dijkstra_drive(NodeId source) const {
  const std::size_t n = points_.size();
  Tree t{std::vector<double>(n, kUnreachable), std::vector<NodeId>(n, source)};
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  t.dist[source] = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > t.dist[u]) continue;
    for (std::size_t k = out_begin_[u]; k < out_begin_[u + 1]; ++k) {
      const Edge& e = edges_[out_edges_[k]];
      double nd = d + e.drive_time;
      if (nd < t.dist[e.to]) {
        t.dist[e.to] = nd;
        t.parent[e.to] = u;
        heap.push({nd, e.to});
      }
    }
  }
  return t;
}

std::vector<double> RoadNetwork::dijkstra_walk(NodeId source) const {
  std::vector<double> dist(points_.size(), kUnreachable);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (std::size_t k = walk_begin_[u]; k < walk_begin_[u + 1]; ++k) {
      auto [v, len] = walk_adj_[k];
      if (d + len < dist[v]) {
        dist[v] = d + len;
        heap.push({dist[v], v});
      }
    }
  }
  return dist;
}

std::shared_ptr<const RoadNetwork::Tree> RoadNetwork::drive_tree(NodeId source) const {
  {
    std::lock_guard lock(cache_->mu);
    auto it = cache_->drive.find(source);
    if (it != cache_->drive.end()) return it->second;
  }
  auto tree = std::make_shared<const Tree>(dijkstra_drive(source));
  std::lock_guard lock(cache_->mu);
  if (cache_->drive.size() >= options_.cache_capacity) cache_->drive.clear();
  cache_->drive.emplace(source, tree);
  return tree;
}

std::shared_ptr<const std::vector<double>> RoadNetwork::walk_tree(NodeId source) const {
  {
    std::lock_guard lock(cache_->mu);
    auto it = cache_->walk.find(source);
    if (it != cache_->walk.end()) return it->second;
  }
  auto dist = std::make_shared<const std::vector<double>>(dijkstra_walk(source));
  std::lock_guard lock(cache_->mu);
  if (cache_->walk.size() >= options_.cache_capacity) cache_->walk.clear();
  cache_->walk.emplace(source, dist);
  return dist;
}

Seconds RoadNetwork::drive_time(NodeId a, NodeId b) const {
  check(a);
  check(b);
  if (all_pairs_) return drive_apsp_[a * points_.size() + b];
  return drive_tree(a)->dist[b];
}

Meters RoadNetwork::walk_distance(NodeId a, NodeId b) const {
  check(a);
  check(b);
  if (all_pairs_) return walk_apsp_[a * points_.size() + b];
  return (*walk_tree(a))[b];
}

NodeId RoadNetwork::next_hop(NodeId a, NodeId b) const {
  check(a);
  check(b);
  if (a == b) return b;
  if (all_pairs_) return next_apsp_[a * points_.size() + b];
  auto tree = drive_tree(a);
  if (tree->dist[b] == kUnreachable) return b;
  NodeId v = b;
  while (tree->parent[v] != a) v = tree->parent[v];
  return v;
}

std::vector<NodeId> RoadNetwork::drive_path(NodeId a, NodeId b) const {
  if (drive_time(a, b) == kUnreachable) return {};
  std::vector<NodeId> path{a};
  while (path.back() != b) path.push_back(next_hop(path.back(), b));
  return path;
}

const Edge& RoadNetwork::edge_between(NodeId a, NodeId b) const {
  check(a);
  const Edge* best = nullptr;
  for (std::size_t k = out_begin_[a]; k < out_begin_[a + 1]; ++k) {
    const Edge& e = edges_[out_edges_[k]];
    if (e.to == b && (best == nullptr || e.drive_time < best->drive_time)) best = &e;
  }
  if (best == nullptr)
    throw std::out_of_range("no edge " + std::to_string(a) + "->" + std::to_string(b));
  return *best;
}

std::vector<std::pair<NodeId, Meters>> RoadNetwork::walk_neighborhood(NodeId origin, Meters d_r) const {
  check(origin);
  if (d_r < 0.0) throw std::invalid_argument("walk radius must be non-negative");
  // Bounded Dijkstra; independent of the all-pairs tables.
  std::map<NodeId, double> settled;
  std::unordered_map<NodeId, double> best{{origin, 0.0}};
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  heap.push({0.0, origin});
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (settled.count(u) || d > best[u]) continue;
    settled.emplace(u, d);
    for (std::size_t k = walk_begin_[u]; k < walk_begin_[u + 1]; ++k) {
      auto [v, len] = walk_adj_[k];
      double nd = d + len;
      if (nd > d_r) continue;
      auto it = best.find(v);
      if (it == best.end() || nd < it->second) {
        best[v] = nd;
        heap.push({nd, v});
      }
    }
  }
  return {settled.begin(), settled.end()};
}

std::vector<NodeId> nodes_within_walk(const RoadNetwork& net, NodeId origin, Meters d_r) {
  std::vector<NodeId> out;
  for (auto [n, d] : net.walk_neighborhood(origin, d_r)) out.push_back(n);
  return out;
}

RoadNetwork load_network(std::istream& nodes_csv, std::istream& edges_csv, NetworkOptions options) {
  struct RawEdge {
    std::int64_t from, to;
    double length, time;
    std::size_t line;
  };
  std::map<std::int64_t, Point> nodes;
  std::vector<std::string_view> f;
  {
    csv::Reader r(nodes_csv, "id,x,y");
    while (r.row(f)) {
      if (f.size() != 3) throw ParseError("expected 3 fields", r.line());
      auto id = r.field<std::int64_t>(f[0], "id");
      Point p{r.field<double>(f[1], "x"), r.field<double>(f[2], "y")};
      if (!nodes.emplace(id, p).second) throw ParseError("duplicate node id " + std::to_string(id), r.line());
    }
  }
  std::vector<RawEdge> raw;
  {
    csv::Reader r(edges_csv, "from,to,length_m,drive_time_s");
    while (r.row(f)) {
      if (f.size() != 4) throw ParseError("expected 4 fields", r.line());
      RawEdge e{r.field<std::int64_t>(f[0], "from"), r.field<std::int64_t>(f[1], "to"),
                r.field<double>(f[2], "length_m"), r.field<double>(f[3], "drive_time_s"), r.line()};
      if (!(e.length > 0.0)) throw ParseError("length_m must be positive", r.line());
      if (!(e.time > 0.0)) throw ParseError("drive_time_s must be positive", r.line());
      if (!nodes.count(e.from) || !nodes.count(e.to))
        throw ValidationError("edge on line " + std::to_string(e.line) + " references unknown node");
      raw.push_back(e);
    }
  }

  // Drop nodes without outgoing edges until stable.
  std::map<std::int64_t, bool> alive;
  for (auto& [id, p] : nodes) alive[id] = true;
  for (bool changed = true; changed;) {
    changed = false;
    std::map<std::int64_t, int> outdeg;
    for (const RawEdge& e : raw)
      if (alive[e.from] && alive[e.to]) ++outdeg[e.from];
    for (auto& [id, a] : alive) {
      if (a && outdeg[id] == 0) {
        a = false;
        changed = true;
      }
    }
  }

  // Largest weakly connected component among survivors.
  std::map<std::int64_t, std::int64_t> root;
  for (auto& [id, a] : alive)
    if (a) root[id] = id;
  std::function<std::int64_t(std::int64_t)> find = [&](std::int64_t x) {
    while (root[x] != x) x = root[x] = root[root[x]];
    return x;
  };
  for (const RawEdge& e : raw) {
    if (!alive[e.from] || !alive[e.to]) continue;
    auto a = find(e.from), b = find(e.to);
    if (a != b) root[std::max(a, b)] = std::min(a, b);
  }
  std::map<std::int64_t, std::size_t> size;
  for (auto& [id, r] : root) ++size[find(id)];
  std::int64_t keep = 0;
  std::size_t keep_size = 0;
  for (auto& [r, s] : size)
    if (s > keep_size) keep = r, keep_size = s;

  std::vector<Point> points;
  std::vector<std::int64_t> ids;
  std::map<std::int64_t, NodeId> index;
  for (auto& [id, r] : root) {
    if (find(id) != keep) continue;
    index[id] = static_cast<NodeId>(points.size());
    points.push_back(nodes[id]);
    ids.push_back(id);
  }
  std::vector<Edge> edges;
  for (const RawEdge& e : raw) {
    auto a = index.find(e.from), b = index.find(e.to);
    if (a == index.end() || b == index.end()) continue;
    edges.push_back({a->second, b->second, e.length, e.time});
  }
  return RoadNetwork(std::move(points), std::move(edges), std::move(ids), options);
}

RoadNetwork load_network_files(const std::string& nodes_path, const std::string& edges_path,
                               NetworkOptions options) {
  std::ifstream nodes(nodes_path), edges(edges_path);
  if (!nodes) throw std::runtime_error("cannot open " + nodes_path);
  if (!edges) throw std::runtime_error("cannot open " + edges_path);
  return load_network(nodes, edges, options);
}

RoadNetwork generate_grid(std::size_t width, std::size_t height, Meters edge_len, double drive_speed,
                          NetworkOptions options) {
  if (width < 2 || height < 2) throw std::invalid_argument("grid needs at least 2x2 nodes");
  if (!(edge_len > 0.0) || !(drive_speed > 0.0))
    throw std::invalid_argument("edge length and drive speed must be positive");
  std::vector<Point> points;
  std::vector<Edge> edges;
  const double t = edge_len / drive_speed;
  auto id = [&](std::size_t r, std::size_t c) { return static_cast<NodeId>(r * width + c); };
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) points.push_back({c * edge_len, r * edge_len});
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      if (c + 1 < width) {
        edges.push_back({id(r, c), id(r, c + 1), edge_len, t});
        edges.push_back({id(r, c + 1), id(r, c), edge_len, t});
      }
      if (r + 1 < height) {
        edges.push_back({id(r, c), id(r + 1, c), edge_len, t});
        edges.push_back({id(r + 1, c), id(r, c), edge_len, t});
      }
    }
  }
  return RoadNetwork(std::move(points), std::move(edges), {}, options);
}

void write_network(const RoadNetwork& net, std::ostream& nodes_csv, std::ostream& edges_csv) {
  nodes_csv.precision(17);
  edges_csv.precision(17);
  nodes_csv << "id,x,y\n";
  for (NodeId n = 0; n < net.node_count(); ++n)
    nodes_csv << net.original_id(n) << ',' << net.point(n).x << ',' << net.point(n).y << '\n';
  edges_csv << "from,to,length_m,drive_time_s\n";
  for (const Edge& e : net.edges())
    edges_csv << net.original_id(e.from) << ',' << net.original_id(e.to) << ',' << e.length << ','
              << e.drive_time << '\n';
}

}  // namespace poolmatch
