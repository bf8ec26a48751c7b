#include "poolmatch/rvrp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace poolmatch::rvrp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Slack on delay bounds, absorbing rounding in accumulated times.
constexpr double kTimeTol = 1e-6;

bool within(double elapsed, double bound) { return elapsed <= bound + kTimeTol; }

struct FlatArea {
  AreaRef ref;
  RequestId request = 0;
  std::vector<NodeId> nodes;   // ascending
  std::vector<double> ready;   // per node; -inf when nobody is walking
  int partner = -1;            // P_j <-> E_j
  int awaiting = -1;           // j for P_j / E_j
  double ref_time = 0.0;       // P_j: delay reference; D_k: ride start
  double bound = kInf;         // P_j: delta_j; E_j / D_k: lambda
  std::size_t first_point = 0; // local point index of nodes[0]
};

struct Model {
  const RoadNetwork& net;
  const Instance& inst;
  std::vector<FlatArea> areas;
  std::size_t n_awaiting = 0;
  std::uint32_t full_mask = 0;
  std::vector<NodeId> point_node;
  std::vector<double> dist;
  std::vector<double> near;

  Model(const RoadNetwork& network, const Instance& instance) : net(network), inst(instance) {
    if (!net.valid(inst.start_node)) throw std::invalid_argument("start node out of range");
    if (inst.capacity != 0 && inst.awaiting.size() + inst.onboard.size() > inst.capacity)
      throw std::invalid_argument("instance exceeds vehicle capacity");
    if (inst.area_count() > 31) throw std::invalid_argument("too many areas in routing instance");
    if (inst.point_count() >= (std::size_t{1} << 24)) throw std::invalid_argument("routing instance too large");
    n_awaiting = inst.awaiting.size();
    const std::size_t n = n_awaiting;
    areas.resize(inst.area_count());
    auto fill = [&](FlatArea& fa, const Area& area, const AwaitingRequest* walker) {
      if (area.members.empty()) throw std::invalid_argument("empty area for request " + std::to_string(area.request));
      std::vector<AreaMember> members = area.members;
      std::sort(members.begin(), members.end(), [](auto& a, auto& b) { return a.node < b.node; });
      for (const AreaMember& m : members) {
        if (!net.valid(m.node)) throw std::invalid_argument("area node " + std::to_string(m.node) + " out of range");
        fa.nodes.push_back(m.node);
        fa.ready.push_back(walker ? ready_time(*walker, m) : -kInf);
      }
    };
    for (std::size_t j = 0; j < n; ++j) {
      const AwaitingRequest& r = inst.awaiting[j];
      FlatArea& p = areas[j];
      FlatArea& e = areas[n + j];
      p.ref = {StopKind::pickup, static_cast<std::uint32_t>(j)};
      e.ref = {StopKind::dropoff, static_cast<std::uint32_t>(j)};
      p.request = e.request = r.id;
      p.partner = static_cast<int>(n + j);
      e.partner = static_cast<int>(j);
      p.awaiting = e.awaiting = static_cast<int>(j);
      p.ref_time = pickup_reference(inst, r);
      p.bound = r.max_pickup_delay;
      e.bound = r.max_detour;
      fill(p, r.pickup, &r);
      fill(e, r.dropoff, nullptr);
    }
    for (std::size_t k = 0; k < inst.onboard.size(); ++k) {
      const OnboardRequest& r = inst.onboard[k];
      FlatArea& d = areas[2 * n + k];
      d.ref = {StopKind::onboard_dropoff, static_cast<std::uint32_t>(k)};
      d.request = r.id;
      d.ref_time = r.pickup_time;
      d.bound = r.max_detour;
      fill(d, r.dropoff, nullptr);
    }
    full_mask = areas.size() == 32 ? ~0u : ((1u << areas.size()) - 1u);

    // Local tables: point 0 is the start, then every area member in area
    // order. dist is row-major by source point; near[a * P + p] is the
    // drive time from point p to the closest member of area a.
    point_node.push_back(inst.start_node);
    for (FlatArea& fa : areas) {
      fa.first_point = point_node.size();
      point_node.insert(point_node.end(), fa.nodes.begin(), fa.nodes.end());
    }
    const std::size_t P = point_node.size();
    dist.resize(P * P);
    for (std::size_t i = 0; i < P; ++i)
      for (std::size_t j = 0; j < P; ++j) dist[i * P + j] = net.drive_time(point_node[i], point_node[j]);
    near.assign(areas.size() * P, kInf);
    for (std::size_t a = 0; a < areas.size(); ++a)
      for (std::size_t i = 0; i < P; ++i)
        for (std::size_t k = 0; k < areas[a].nodes.size(); ++k)
          near[a * P + i] = std::min(near[a * P + i], dist[i * P + areas[a].first_point + k]);
  }

  std::size_t point_count() const { return point_node.size(); }
  double leg(std::size_t from, std::size_t to) const { return dist[from * point_node.size() + to]; }

  int index_of(AreaRef ref) const {
    switch (ref.kind) {
      case StopKind::pickup: return ref.index < n_awaiting ? static_cast<int>(ref.index) : -1;
      case StopKind::dropoff: return ref.index < n_awaiting ? static_cast<int>(n_awaiting + ref.index) : -1;
      case StopKind::onboard_dropoff:
        return ref.index < inst.onboard.size() ? static_cast<int>(2 * n_awaiting + ref.index) : -1;
    }
    return -1;
  }

  bool eligible(int a, std::uint32_t mask) const {
    if (mask & (1u << a)) return false;
    const FlatArea& fa = areas[a];
    return fa.ref.kind != StopKind::dropoff || (mask & (1u << fa.partner));
  }

  double arrive(int a, std::size_t k, std::size_t cur_point, double t) const {
    double d = leg(cur_point, areas[a].first_point + k);
    if (d == kInf) return kInf;
    return std::max(t + d, areas[a].ready[k]);
  }

  // Delay bound check for serving area a at `arrival`; pick_time holds pickup
  // instants of awaiting requests already on the route.
  bool stop_ok(int a, double arrival, const std::vector<double>& pick_time) const {
    const FlatArea& fa = areas[a];
    switch (fa.ref.kind) {
      case StopKind::pickup: return within(arrival - fa.ref_time, fa.bound);
      case StopKind::dropoff: return within(arrival - pick_time[fa.awaiting], fa.bound);
      case StopKind::onboard_dropoff: return within(arrival - fa.ref_time, fa.bound);
    }
    return false;
  }
};

struct Choice {
  int area;
  NodeId node;
  auto operator<=>(const Choice&) const = default;
};

RoutePlan make_plan(const Model& m, const std::vector<Choice>& seq) {
  RoutePlan plan;
  std::vector<double> pick(m.n_awaiting, kInf);
  NodeId cur = m.inst.start_node;
  double t = m.inst.start_time;
  for (const Choice& c : seq) {
    const FlatArea& fa = m.areas[c.area];
    std::size_t k = std::lower_bound(fa.nodes.begin(), fa.nodes.end(), c.node) - fa.nodes.begin();
    double leg = m.net.drive_time(cur, c.node);
    t = std::max(t + leg, fa.ready[k]);
    double deadline = kInf;
    switch (fa.ref.kind) {
      case StopKind::pickup:
        pick[fa.awaiting] = t;
        deadline = fa.ref_time + fa.bound;
        break;
      case StopKind::dropoff: deadline = pick[fa.awaiting] + fa.bound; break;
      case StopKind::onboard_dropoff: deadline = fa.ref_time + fa.bound; break;
    }
    plan.total_time += leg;
    plan.stops.push_back({c.node, fa.ref, t, fa.request, deadline});
    cur = c.node;
  }
  return plan;
}

class Search {
 public:
  enum class Order { lexicographic, nearest_first };

  Search(const Model& m, Order order) : m_(m), order_(order), pick_time_(m.n_awaiting, 0.0) {}

  void set_incumbent(double cost, std::vector<Choice> seq) {
    best_cost_ = cost;
    best_ = std::move(seq);
    have_ = true;
    heuristic_ = true;
  }

  // Optimization: full branch and bound. First-feasible: stop at first leaf.
  void run(bool stop_at_first) {
    stop_at_first_ = stop_at_first;
    done_ = false;
    memo_.clear();
    dfs(0, -1, 0, 0, m_.inst.start_time, 0.0);
  }

  std::size_t expanded() const { return expanded_; }

  bool found() const { return have_; }
  const std::vector<Choice>& best() const { return best_; }
  double best_cost() const { return best_cost_; }

 private:
  // Returns false if some unvisited area can no longer be served in time.
  // Otherwise sets lb to cost plus the farthest unvisited area's nearest point.
  bool bound(std::uint32_t mask, std::size_t cur, double t, double cost, double& lb) const {
    double far = 0.0;
    const std::size_t P = m_.point_count();
    for (std::size_t a = 0; a < m_.areas.size(); ++a) {
      if (mask & (1u << a)) continue;
      const FlatArea& fa = m_.areas[a];
      const double near = m_.near[a * P + cur];
      if (near == kInf) return false;
      far = std::max(far, near);
      double deadline = kInf;
      switch (fa.ref.kind) {
        case StopKind::pickup: deadline = fa.ref_time + fa.bound; break;
        case StopKind::dropoff:
          if (mask & (1u << fa.partner)) deadline = pick_time_[fa.awaiting] + fa.bound;
          break;
        case StopKind::onboard_dropoff: deadline = fa.ref_time + fa.bound; break;
      }
      if (t + near > deadline + kTimeTol) return false;
    }
    lb = cost + far;
    return true;
  }

  bool prune_cost(double lb) const {
    if (!have_ || stop_at_first_) return false;
    const double tol = 1e-9 * std::max(1.0, std::abs(best_cost_));
    if (lb > best_cost_ + tol) return true;
    // Anything reached later in lexicographic order loses equal-cost ties.
    return !heuristic_ && order_ == Order::lexicographic && lb >= best_cost_ + tol;
  }

  // Partial routes ending at the same (visited set, area, node). One that is
  // no cheaper, no earlier and has no later pickups of still-open requests
  // than a route seen before cannot do better; since prefixes are visited in
  // search order, it cannot win a tie either.
  struct Label {
    double cost, t;
    std::vector<double> picks;
  };

  bool dominated_or_record(std::uint32_t mask, int area, std::size_t k, double t, double cost) {
    if (area < 0) return false;
    const std::uint64_t key = (static_cast<std::uint64_t>(mask) << 32) | (static_cast<std::uint64_t>(area) << 24) | k;
    Label cur{cost, t, {}};
    for (std::size_t j = 0; j < m_.n_awaiting; ++j)
      if ((mask >> j & 1u) && !(mask >> (m_.n_awaiting + j) & 1u)) cur.picks.push_back(pick_time_[j]);
    auto covers = [](const Label& a, const Label& b) {
      if (a.cost > b.cost || a.t > b.t) return false;
      for (std::size_t i = 0; i < a.picks.size(); ++i)
        if (a.picks[i] < b.picks[i]) return false;
      return true;
    };
    std::vector<Label>& labels = memo_[key];
    for (const Label& l : labels)
      if (covers(l, cur)) return true;
    std::erase_if(labels, [&](const Label& l) { return covers(cur, l); });
    labels.push_back(std::move(cur));
    return false;
  }

  void dfs(std::uint32_t mask, int last, std::size_t last_k, std::size_t cur, double t, double cost) {
    if (done_) return;
    ++expanded_;
    if (mask == m_.full_mask) {
      if (!have_ || cost < best_cost_ || (cost == best_cost_ && heuristic_)) {
        best_cost_ = cost;
        best_ = seq_;
        have_ = true;
        heuristic_ = false;
      }
      if (stop_at_first_) done_ = true;
      return;
    }
    double lb = cost;
    if (!bound(mask, cur, t, cost, lb) || prune_cost(lb)) return;
    if (dominated_or_record(mask, last, last_k, t, cost)) return;

    struct Child {
      double arrival;
      int area;
      std::size_t k;
    };
    std::vector<Child> children;
    for (std::size_t a = 0; a < m_.areas.size(); ++a) {
      if (!m_.eligible(static_cast<int>(a), mask)) continue;
      const FlatArea& fa = m_.areas[a];
      for (std::size_t k = 0; k < fa.nodes.size(); ++k) {
        double arr = m_.arrive(static_cast<int>(a), k, cur, t);
        if (arr == kInf || !m_.stop_ok(static_cast<int>(a), arr, pick_time_)) continue;
        children.push_back({arr, static_cast<int>(a), k});
      }
    }
    if (order_ == Order::nearest_first) {
      std::stable_sort(children.begin(), children.end(),
                       [](const Child& x, const Child& y) { return x.arrival < y.arrival; });
    }
    for (const Child& c : children) {
      const FlatArea& fa = m_.areas[c.area];
      const NodeId node = fa.nodes[c.k];
      const std::size_t point = fa.first_point + c.k;
      const double leg = m_.leg(cur, point);
      double saved = 0.0;
      if (fa.ref.kind == StopKind::pickup) {
        saved = pick_time_[fa.awaiting];
        pick_time_[fa.awaiting] = c.arrival;
      }
      seq_.push_back({c.area, node});
      dfs(mask | (1u << c.area), c.area, c.k, point, c.arrival, cost + leg);
      seq_.pop_back();
      if (fa.ref.kind == StopKind::pickup) pick_time_[fa.awaiting] = saved;
      if (done_) return;
    }
  }

  const Model& m_;
  Order order_;
  std::vector<double> pick_time_;
  std::vector<Choice> seq_;
  std::vector<Choice> best_;
  double best_cost_ = kInf;
  bool have_ = false;
  bool heuristic_ = false;
  bool stop_at_first_ = false;
  bool done_ = false;
  std::size_t expanded_ = 0;
  std::unordered_map<std::uint64_t, std::vector<Label>> memo_;
};

// Evaluates a full sequence; nullopt if a leg is unreachable or a bound fails.
std::optional<double> evaluate(const Model& m, const std::vector<Choice>& seq) {
  std::vector<double> pick(m.n_awaiting, 0.0);
  std::size_t cur = 0;
  double t = m.inst.start_time;
  double cost = 0.0;
  for (const Choice& c : seq) {
    const FlatArea& fa = m.areas[c.area];
    std::size_t k = std::lower_bound(fa.nodes.begin(), fa.nodes.end(), c.node) - fa.nodes.begin();
    double arr = m.arrive(c.area, k, cur, t);
    if (arr == kInf || !m.stop_ok(c.area, arr, pick)) return std::nullopt;
    if (fa.ref.kind == StopKind::pickup) pick[fa.awaiting] = arr;
    cost += m.leg(cur, fa.first_point + k);
    t = arr;
    cur = fa.first_point + k;
  }
  return cost;
}

}  // namespace

const char* to_string(DelayReference ref) {
  return ref == DelayReference::route_start ? "route_start" : "request_arrival";
}

DelayReference parse_delay_reference(const std::string& text) {
  if (text == "route_start") return DelayReference::route_start;
  if (text == "request_arrival") return DelayReference::request_arrival;
  throw std::invalid_argument("unknown delay reference '" + text + "'");
}

std::size_t Instance::point_count() const {
  std::size_t n = 0;
  for (const auto& r : awaiting) n += r.pickup.members.size() + r.dropoff.members.size();
  for (const auto& r : onboard) n += r.dropoff.members.size();
  return n;
}

Seconds pickup_reference(const Instance& inst, const AwaitingRequest& req) {
  if (req.pickup_ref) return *req.pickup_ref;
  return inst.reference == DelayReference::route_start ? inst.start_time : req.arrival;
}

Seconds ready_time(const AwaitingRequest& req, const AreaMember& member) {
  if (!req.walk_speed) return -kInf;
  return req.arrival + member.walk / *req.walk_speed;
}

std::optional<RoutePlan> solve_feasible_only(const RoadNetwork& net, const Instance& inst) {
  Model m(net, inst);
  Search s(m, Search::Order::nearest_first);
  s.run(true);
  if (!s.found()) return std::nullopt;
  return make_plan(m, s.best());
}

std::optional<RoutePlan> solve(const RoadNetwork& net, const Instance& inst) {
  Model m(net, inst);
  Search greedy(m, Search::Order::nearest_first);
  greedy.run(true);
  if (!greedy.found()) return std::nullopt;
  Search exact(m, Search::Order::lexicographic);
  exact.set_incumbent(greedy.best_cost(), greedy.best());
  exact.run(false);
  return make_plan(m, exact.best());
}

std::optional<RoutePlan> solve_bruteforce(const RoadNetwork& net, const Instance& inst, std::size_t max_points) {
  if (inst.point_count() > max_points)
    throw std::length_error("brute-force routing oracle limited to " + std::to_string(max_points) + " points");
  Model m(net, inst);
  const int n = static_cast<int>(m.areas.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  bool have = false;
  double best_cost = kInf;
  std::vector<Choice> best;
  do {
    bool precedence = true;
    std::vector<int> pos(n);
    for (int i = 0; i < n; ++i) pos[order[i]] = i;
    for (int a = 0; a < n; ++a)
      if (m.areas[a].ref.kind == StopKind::dropoff && pos[a] < pos[m.areas[a].partner]) precedence = false;
    if (!precedence) continue;
    std::vector<std::size_t> pick(n, 0);
    for (;;) {
      std::vector<Choice> seq;
      for (int i = 0; i < n; ++i) seq.push_back({order[i], m.areas[order[i]].nodes[pick[i]]});
      if (auto cost = evaluate(m, seq)) {
        if (!have || *cost < best_cost || (*cost == best_cost && seq < best)) {
          have = true;
          best_cost = *cost;
          best = seq;
        }
      }
      int i = n - 1;
      while (i >= 0 && ++pick[i] == m.areas[order[i]].nodes.size()) pick[i--] = 0;
      if (i < 0) break;
    }
  } while (std::next_permutation(order.begin(), order.end()));
  if (!have) return std::nullopt;
  return make_plan(m, best);
}

RoutePlan retime(const RoadNetwork& net, const Instance& inst, const std::vector<Stop>& stops) {
  Model m(net, inst);
  std::vector<Choice> seq;
  for (const Stop& s : stops) {
    int a = m.index_of(s.area);
    if (a < 0) throw std::invalid_argument("stop refers to an unknown area");
    if (!std::binary_search(m.areas[a].nodes.begin(), m.areas[a].nodes.end(), s.node))
      throw std::invalid_argument("stop node is not a member of its area");
    seq.push_back({a, s.node});
  }
  return make_plan(m, seq);
}

std::vector<Violation> validate(const RoadNetwork& net, const Instance& inst, const RoutePlan& plan) {
  std::vector<Violation> out;
  Model m(net, inst);
  auto report = [&](int c, std::string msg) { out.push_back({c, std::move(msg)}); };

  std::vector<int> visits(m.areas.size(), 0);
  std::vector<double> pick(m.n_awaiting, kInf);
  NodeId cur = inst.start_node;
  double t = inst.start_time;
  double total = 0.0;
  for (std::size_t i = 0; i < plan.stops.size(); ++i) {
    const Stop& s = plan.stops[i];
    const std::string where = "stop " + std::to_string(i);
    int a = m.index_of(s.area);
    if (a < 0) {
      report(0, where + " refers to an unknown area");
      continue;
    }
    const FlatArea& fa = m.areas[a];
    ++visits[a];
    auto it = std::lower_bound(fa.nodes.begin(), fa.nodes.end(), s.node);
    if (it == fa.nodes.end() || *it != s.node) {
      report(fa.ref.kind == StopKind::pickup ? 2 : 3, where + ": node " + std::to_string(s.node) + " not in area");
      continue;
    }
    double leg = net.drive_time(cur, s.node);
    if (leg == kInf) {
      report(i == 0 ? 1 : 4, where + ": unreachable from previous position");
      continue;
    }
    double expect = std::max(t + leg, fa.ready[it - fa.nodes.begin()]);
    if (std::abs(expect - s.arrival) > kTimeTol)
      report(4, where + ": arrival " + std::to_string(s.arrival) + " but travel gives " + std::to_string(expect));
    total += leg;
    t = expect;
    cur = s.node;
    switch (fa.ref.kind) {
      case StopKind::pickup:
        pick[fa.awaiting] = t;
        if (!within(t - fa.ref_time, fa.bound))
          report(6, where + ": pickup delay " + std::to_string(t - fa.ref_time) + " exceeds " + std::to_string(fa.bound));
        break;
      case StopKind::dropoff:
        if (pick[fa.awaiting] == kInf) {
          report(5, where + ": dropoff of request " + std::to_string(fa.request) + " before its pickup");
        } else if (!within(t - pick[fa.awaiting], fa.bound)) {
          report(7, where + ": ride time " + std::to_string(t - pick[fa.awaiting]) + " exceeds " +
                        std::to_string(fa.bound));
        }
        break;
      case StopKind::onboard_dropoff:
        if (!within(t - fa.ref_time, fa.bound))
          report(8, where + ": ride time " + std::to_string(t - fa.ref_time) + " exceeds " + std::to_string(fa.bound));
        break;
    }
  }
  for (std::size_t a = 0; a < m.areas.size(); ++a) {
    if (visits[a] != 1)
      report(m.areas[a].ref.kind == StopKind::pickup ? 2 : 3,
             std::string(to_string(m.areas[a].ref.kind)) + " area " + std::to_string(m.areas[a].ref.index) +
                 " visited " + std::to_string(visits[a]) + " times");
  }
  if (std::abs(total - plan.total_time) > kTimeTol)
    report(0, "total_time " + std::to_string(plan.total_time) + " but legs sum to " + std::to_string(total));
  return out;
}

namespace {

void dump_members(const Area& area, std::ostream& out) {
  out << " :";
  for (const AreaMember& m : area.members) out << ' ' << m.node << ':' << m.walk;
  out << '\n';
}

template <typename T>
void write_opt(const std::optional<T>& v, std::ostream& out) {
  if (v)
    out << *v;
  else
    out << '-';
}

Area parse_members(std::istringstream& in, RequestId req, AreaKind kind, std::size_t line) {
  std::string colon;
  in >> colon;
  if (colon != ":") throw ParseError("expected ':' before area members", line);
  Area area{req, kind, 0, {}};
  std::string tok;
  while (in >> tok) {
    auto sep = tok.find(':');
    if (sep == std::string::npos) throw ParseError("member must be node:walk", line);
    area.members.push_back({static_cast<NodeId>(std::stoul(tok.substr(0, sep))), std::stod(tok.substr(sep + 1))});
  }
  if (area.members.empty()) throw ParseError("area without members", line);
  area.original = area.members.front().node;
  for (const AreaMember& m : area.members)
    if (m.walk == 0.0) area.original = m.node;
  return area;
}

std::optional<double> parse_opt(const std::string& tok) {
  if (tok == "-") return std::nullopt;
  return std::stod(tok);
}

}  // namespace

void dump_instance(const Instance& inst, std::ostream& out) {
  auto old = out.precision(17);
  out << "rvrp-instance 1\n";
  out << "start " << inst.start_node << ' ' << inst.start_time << ' ' << to_string(inst.reference) << ' '
      << inst.capacity << '\n';
  for (const AwaitingRequest& r : inst.awaiting) {
    out << "P " << r.id << ' ' << r.arrival << ' ' << r.max_pickup_delay << ' ';
    write_opt(r.pickup_ref, out);
    out << ' ';
    write_opt(r.walk_speed, out);
    dump_members(r.pickup, out);
    out << "E " << r.id << ' ' << r.max_detour;
    dump_members(r.dropoff, out);
  }
  for (const OnboardRequest& r : inst.onboard) {
    out << "D " << r.id << ' ' << r.pickup_time << ' ' << r.max_detour;
    dump_members(r.dropoff, out);
  }
  out.precision(old);
}

Instance parse_instance(std::istream& in) {
  Instance inst;
  std::string line;
  std::size_t no = 0;
  bool header = false, start = false;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    try {
      if (!header) {
        int version = 0;
        if (tag != "rvrp-instance" || !(ls >> version) || version != 1) throw ParseError("bad header", no);
        header = true;
      } else if (tag == "start") {
        std::string ref;
        if (!(ls >> inst.start_node >> inst.start_time >> ref >> inst.capacity)) throw ParseError("bad start line", no);
        inst.reference = parse_delay_reference(ref);
        start = true;
      } else if (tag == "P") {
        AwaitingRequest r;
        std::string ref, speed;
        if (!(ls >> r.id >> r.arrival >> r.max_pickup_delay >> ref >> speed)) throw ParseError("bad P line", no);
        r.pickup_ref = parse_opt(ref);
        r.walk_speed = parse_opt(speed);
        r.pickup = parse_members(ls, r.id, AreaKind::pickup, no);
        inst.awaiting.push_back(std::move(r));
      } else if (tag == "E") {
        RequestId id = 0;
        double lambda = 0.0;
        if (!(ls >> id >> lambda)) throw ParseError("bad E line", no);
        if (inst.awaiting.empty() || inst.awaiting.back().id != id || !inst.awaiting.back().dropoff.members.empty())
          throw ParseError("E line must follow the P line of the same request", no);
        inst.awaiting.back().max_detour = lambda;
        inst.awaiting.back().dropoff = parse_members(ls, id, AreaKind::dropoff, no);
      } else if (tag == "D") {
        OnboardRequest r;
        if (!(ls >> r.id >> r.pickup_time >> r.max_detour)) throw ParseError("bad D line", no);
        r.dropoff = parse_members(ls, r.id, AreaKind::dropoff, no);
        inst.onboard.push_back(std::move(r));
      } else {
        throw ParseError("unknown tag '" + tag + "'", no);
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(e.what(), no);
    }
  }
  if (!header || !start) throw ParseError("incomplete instance", no);
  for (const AwaitingRequest& r : inst.awaiting)
    if (r.dropoff.members.empty()) throw ParseError("request " + std::to_string(r.id) + " lacks an E line", no);
  return inst;
}

}  // namespace poolmatch::rvrp
