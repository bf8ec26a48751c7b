#pragma once

#include <utility>
#include <vector>

#include "poolmatch/core.hpp"
#include "poolmatch/network.hpp"

namespace poolmatch {

enum class AreaKind : std::uint8_t { pickup, dropoff };

struct AreaMember {
  NodeId node = 0;
  Meters walk = 0.0;  // walking distance from the area's original node

  bool operator==(const AreaMember&) const = default;
};

// Extended pickup or drop-off area of one request. Members are sorted by node
// id; the original node is always a member at walk distance 0.
struct Area {
  RequestId request = 0;
  AreaKind kind = AreaKind::pickup;
  NodeId original = 0;
  std::vector<AreaMember> members;

  bool contains(NodeId n) const;
  const AreaMember* find(NodeId n) const;
};

// Single-node area around `node` (fixed-point service).
Area point_area(RequestId request, AreaKind kind, NodeId node);

Area build_area(const RoadNetwork& net, const Request& request, AreaKind kind, const DelayParams& params);

// Makes the two areas of one request disjoint: a shared node goes to the area
// whose original is nearer on foot, pickup on ties.
std::pair<Area, Area> resolve_overlap(const RoadNetwork& net, Area pickup, Area dropoff);

// Pickup points the vehicle can drive to within the pickup delay.
std::vector<NodeId> vehicle_reachable_points(const RoadNetwork& net, const Vehicle& vehicle,
                                             const Area& pickup, const DelayParams& params);

}  // namespace poolmatch
