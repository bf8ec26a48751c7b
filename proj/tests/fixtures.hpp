#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "poolmatch/areas.hpp"
#include "poolmatch/assignment.hpp"
#include "poolmatch/network.hpp"
#include "poolmatch/rvrp.hpp"

namespace fixture {

using namespace poolmatch;
using Rng = std::mt19937_64;

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

// Strongly connected: a directed ring plus random chords, integer times.
inline RoadNetwork random_network(Rng& rng, std::size_t n) {
  std::vector<Point> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({uniform(rng, 0, 1000), uniform(rng, 0, 1000)});
  std::vector<Edge> edges;
  auto add = [&](NodeId a, NodeId b) {
    const double len = std::round(uniform(rng, 20, 200));
    edges.push_back({a, b, len, std::round(len / uniform(rng, 5, 12))});
  };
  for (std::size_t i = 0; i < n; ++i) add(static_cast<NodeId>(i), static_cast<NodeId>((i + 1) % n));
  const std::size_t extra = n + static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(n)));
  for (std::size_t k = 0; k < extra; ++k) {
    NodeId a = static_cast<NodeId>(uniform_int(rng, 0, static_cast<int>(n) - 1));
    NodeId b = static_cast<NodeId>(uniform_int(rng, 0, static_cast<int>(n) - 1));
    if (a != b) add(a, b);
  }
  return RoadNetwork(std::move(pts), std::move(edges));
}

inline Area random_area(Rng& rng, const RoadNetwork& net, RequestId id, AreaKind kind, std::size_t max_points,
                        std::set<NodeId>& taken) {
  Area a;
  a.request = id;
  a.kind = kind;
  const int n = static_cast<int>(net.node_count());
  if (taken.size() >= net.node_count()) throw std::invalid_argument("network too small for disjoint areas");
  NodeId orig;
  do orig = static_cast<NodeId>(uniform_int(rng, 0, n - 1));
  while (taken.count(orig));
  taken.insert(orig);
  a.original = orig;
  a.members.push_back({orig, 0.0});
  const std::size_t want = static_cast<std::size_t>(uniform_int(rng, 1, static_cast<int>(max_points)));
  for (int tries = 0; a.members.size() < want && tries < 50; ++tries) {
    NodeId x = static_cast<NodeId>(uniform_int(rng, 0, n - 1));
    if (taken.count(x)) continue;
    taken.insert(x);
    a.members.push_back({x, std::round(uniform(rng, 10, 250))});
  }
  std::sort(a.members.begin(), a.members.end(), [](auto& l, auto& r) { return l.node < r.node; });
  return a;
}

// At most `max_areas` areas of at most `max_points` members each. Delays are
// drawn so that roughly half the instances are feasible.
inline rvrp::Instance random_instance(Rng& rng, const RoadNetwork& net, std::size_t max_areas = 3,
                                      std::size_t max_points = 3) {
  rvrp::Instance inst;
  inst.start_node = static_cast<NodeId>(uniform_int(rng, 0, static_cast<int>(net.node_count()) - 1));
  inst.start_time = std::round(uniform(rng, 0, 500));
  inst.reference = uniform_int(rng, 0, 1) ? rvrp::DelayReference::route_start : rvrp::DelayReference::request_arrival;
  std::set<NodeId> taken;
  std::size_t areas = static_cast<std::size_t>(uniform_int(rng, 1, static_cast<int>(max_areas)));
  RequestId id = 1;
  while (areas > 0) {
    if (areas >= 2 && uniform_int(rng, 0, 2) > 0) {
      rvrp::AwaitingRequest r;
      r.id = id++;
      r.pickup = random_area(rng, net, r.id, AreaKind::pickup, max_points, taken);
      r.dropoff = random_area(rng, net, r.id, AreaKind::dropoff, max_points, taken);
      r.max_pickup_delay = std::round(uniform(rng, 20, 250));
      r.max_detour = std::round(uniform(rng, 20, 400));
      r.arrival = inst.start_time - std::round(uniform(rng, 0, 60));
      if (uniform_int(rng, 0, 3) == 0) r.pickup_ref = inst.start_time - std::round(uniform(rng, 0, 30));
      if (uniform_int(rng, 0, 1)) r.walk_speed = 1.0;
      inst.awaiting.push_back(std::move(r));
      areas -= 2;
    } else {
      rvrp::OnboardRequest o;
      o.id = id++;
      o.dropoff = random_area(rng, net, o.id, AreaKind::dropoff, max_points, taken);
      o.pickup_time = inst.start_time - std::round(uniform(rng, 0, 100));
      o.max_detour = std::round(uniform(rng, 100, 500));
      inst.onboard.push_back(std::move(o));
      areas -= 1;
    }
  }
  return inst;
}

// Vehicles with the empty combo plus random combos over the request ids.
// Integer scores give plenty of ties; `fractional` adds a random fraction.
inline std::vector<assign::VehicleActions> random_actions(Rng& rng, std::size_t vehicles, std::size_t requests,
                                                          std::size_t max_actions, bool fractional) {
  std::vector<assign::VehicleActions> out;
  for (std::size_t v = 0; v < vehicles; ++v) {
    assign::VehicleActions va;
    va.vehicle = static_cast<VehicleId>(v);
    std::set<Combo> seen{Combo{}};
    va.actions.push_back({va.vehicle, {}, {}, fractional ? uniform(rng, -0.5, 0.5) : 0.0});
    const std::size_t n = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(max_actions) - 1));
    for (std::size_t k = 0; k < n; ++k) {
      Combo c;
      for (std::size_t r = 0; r < requests; ++r)
        if (uniform_int(rng, 0, 2) == 0) c.push_back(static_cast<RequestId>(r));
      if (c.size() > 3 || !seen.insert(c).second) continue;
      double s = static_cast<double>(uniform_int(rng, 0, 4));
      if (fractional) s += uniform(rng, 0, 1);
      va.actions.push_back({va.vehicle, c, {}, s});
    }
    out.push_back(std::move(va));
  }
  return out;
}

inline std::vector<RequestId> request_ids(std::size_t n) {
  std::vector<RequestId> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(static_cast<RequestId>(i));
  return ids;
}

// Monotone oracle: infeasible iff some generator set is contained in the combo.
struct MonotoneOracle {
  std::vector<Combo> generators;
  std::size_t calls = 0;

  bool feasible(const Combo& c) const {
    for (const Combo& g : generators)
      if (std::includes(c.begin(), c.end(), g.begin(), g.end())) return false;
    return true;
  }
};

inline MonotoneOracle random_monotone(Rng& rng, std::span<const RequestId> ids) {
  MonotoneOracle o;
  const int k = uniform_int(rng, 0, 6);
  for (int i = 0; i < k; ++i) {
    Combo g;
    for (RequestId r : ids)
      if (uniform_int(rng, 0, 3) == 0) g.push_back(r);
    if (g.empty()) g.push_back(ids[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(ids.size()) - 1))]);
    o.generators.push_back(g);
  }
  return o;
}

}  // namespace fixture
