#include "poolmatch/areas.hpp"

#include <algorithm>
#include <stdexcept>

namespace poolmatch {

const AreaMember* Area::find(NodeId n) const {
  auto it = std::lower_bound(members.begin(), members.end(), n,
                             [](const AreaMember& m, NodeId v) { return m.node < v; });
  return it != members.end() && it->node == n ? &*it : nullptr;
}

bool Area::contains(NodeId n) const { return find(n) != nullptr; }

Area point_area(RequestId request, AreaKind kind, NodeId node) {
  return Area{request, kind, node, {{node, 0.0}}};
}

Area build_area(const RoadNetwork& net, const Request& request, AreaKind kind, const DelayParams& params) {
  const NodeId origin = kind == AreaKind::pickup ? request.pickup : request.dropoff;
  Area area{request.id, kind, origin, {}};
  for (auto [node, walk] : net.walk_neighborhood(origin, params.max_walk)) area.members.push_back({node, walk});
  return area;
}

std::pair<Area, Area> resolve_overlap(const RoadNetwork& net, Area pickup, Area dropoff) {
  if (pickup.original == dropoff.original)
    throw std::invalid_argument("degenerate request " + std::to_string(pickup.request) +
                                ": pickup and dropoff coincide");
  std::vector<AreaMember> p, d;
  std::size_t i = 0, j = 0;
  while (i < pickup.members.size() || j < dropoff.members.size()) {
    if (j == dropoff.members.size() || (i < pickup.members.size() && pickup.members[i].node < dropoff.members[j].node)) {
      p.push_back(pickup.members[i++]);
    } else if (i == pickup.members.size() || dropoff.members[j].node < pickup.members[i].node) {
      d.push_back(dropoff.members[j++]);
    } else {
      // Shared node. Distances are re-queried so the rule holds even for
      // hand-built areas whose stored walk is not a network distance.
      const NodeId n = pickup.members[i].node;
      const bool keep_pickup = n == pickup.original ||
                               (n != dropoff.original &&
                                net.walk_distance(pickup.original, n) <= net.walk_distance(dropoff.original, n));
      if (keep_pickup)
        p.push_back(pickup.members[i]);
      else
        d.push_back(dropoff.members[j]);
      ++i;
      ++j;
    }
  }
  pickup.members = std::move(p);
  dropoff.members = std::move(d);
  return {std::move(pickup), std::move(dropoff)};
}

std::vector<NodeId> vehicle_reachable_points(const RoadNetwork& net, const Vehicle& vehicle, const Area& pickup,
                                             const DelayParams& params) {
  std::vector<NodeId> out;
  for (const AreaMember& m : pickup.members)
    if (net.drive_time(vehicle.location, m.node) <= params.pickup_delay) out.push_back(m.node);
  return out;
}

}  // namespace poolmatch
